#include "covgnn/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <thread>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"

namespace covgnn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string mode_name(Mode mode) {
    return mode == Mode::coverage ? "coverage" : "exploration";
}

Mode mode_from_string(const std::string& name) {
    if (name == "coverage") return Mode::coverage;
    if (name == "exploration") return Mode::exploration;
    throw std::runtime_error("unknown mode: " + name);
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

void read_range(const json& j, const char* key, int& lo, int& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    lo = v.at(0).get<int>();
    hi = v.at(1).get<int>();
}

void read_range(const json& j, const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    lo = v.at(0).get<double>();
    hi = v.at(1).get<double>();
}

MapGenParams gen_from_json(const json& j) {
    MapGenParams p;
    p.width = get_or(j, "width", p.width);
    p.height = get_or(j, "height", p.height);
    p.spacing = get_or(j, "spacing", p.spacing);
    read_range(j, "rects", p.min_rects, p.max_rects);
    read_range(j, "rect_size", p.min_rect_size, p.max_rect_size);
    read_range(j, "discs", p.min_discs, p.max_discs);
    read_range(j, "disc_radius", p.min_disc_radius, p.max_disc_radius);
    p.submap_mean = get_or(j, "submap_mean", p.submap_mean);
    p.submap_spread = get_or(j, "submap_spread", p.submap_spread);
    p.min_diameter = get_or(j, "min_diameter", p.min_diameter);
    if (p.spacing <= 0 || p.width <= 0 || p.height <= 0)
        throw std::runtime_error("config: map generator needs positive dimensions");
    if (p.min_rects > p.max_rects || p.min_discs > p.max_discs)
        throw std::runtime_error("config: obstacle count range inverted");
    return p;
}

json gen_to_json(const MapGenParams& p) {
    return {{"width", p.width},
            {"height", p.height},
            {"spacing", p.spacing},
            {"rects", {p.min_rects, p.max_rects}},
            {"rect_size", {p.min_rect_size, p.max_rect_size}},
            {"discs", {p.min_discs, p.max_discs}},
            {"disc_radius", {p.min_disc_radius, p.max_disc_radius}},
            {"submap_mean", p.submap_mean},
            {"submap_spread", p.submap_spread},
            {"min_diameter", p.min_diameter}};
}

EpisodeSetup episode_from_json(const json& j) {
    EpisodeSetup e;
    e.n_robots = get_or(j, "n_robots", e.n_robots);
    e.horizon = get_or(j, "horizon", e.horizon);
    e.interest_fraction = get_or(j, "interest_fraction", e.interest_fraction);
    e.mode = mode_from_string(get_or<std::string>(j, "mode", "coverage"));
    e.sensor_range_spacings = get_or(j, "sensor_range_spacings", e.sensor_range_spacings);
    e.sensor_range_m = get_or(j, "sensor_range_m", e.sensor_range_m);
    if (e.n_robots < 1 || e.horizon < 0)
        throw std::runtime_error("config: episode needs n_robots >= 1 and horizon >= 0");
    if (e.interest_fraction <= 0 || e.interest_fraction > 1)
        throw std::runtime_error("config: interest_fraction must be in (0, 1]");
    return e;
}

json episode_to_json(const EpisodeSetup& e) {
    return {{"n_robots", e.n_robots},
            {"horizon", e.horizon},
            {"interest_fraction", e.interest_fraction},
            {"mode", mode_name(e.mode)},
            {"sensor_range_spacings", e.sensor_range_spacings},
            {"sensor_range_m", e.sensor_range_m}};
}

ExpertConfig expert_from_json(const json& j) {
    ExpertConfig e;
    e.max_moves = get_or(j, "max_moves", e.max_moves);
    e.max_millis = get_or(j, "max_millis", e.max_millis);
    e.seed = get_or(j, "seed", e.seed);
    if (e.max_moves < 0 || e.max_millis < 0)
        throw std::runtime_error("config: expert budget must be non-negative");
    return e;
}

json expert_to_json(const ExpertConfig& e) {
    return {{"max_moves", e.max_moves}, {"max_millis", e.max_millis}, {"seed", e.seed}};
}

ArchConfig arch_from_json_cfg(const json& j) {
    ArchConfig a;
    a.variant = variant_from_string(get_or<std::string>(j, "variant", "nonlinear"));
    a.receptive_field = get_or(j, "receptive_field", a.receptive_field);
    a.latent_width = get_or(j, "latent_width", a.latent_width);
    a.temperature = get_or(j, "temperature", a.temperature);
    if (a.receptive_field < 0 || a.latent_width < 1)
        throw std::runtime_error("config: arch needs receptive_field >= 0, latent_width >= 1");
    return a;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    t.epochs = get_or(j, "epochs", t.epochs);
    t.batch_size = get_or(j, "batch_size", t.batch_size);
    t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
    t.decay_factor = get_or(j, "decay_factor", t.decay_factor);
    t.decay_interval = get_or(j, "decay_interval", t.decay_interval);
    t.validation_fraction = get_or(j, "validation_fraction", t.validation_fraction);
    t.threads = get_or(j, "threads", t.threads);
    if (t.epochs < 1 || t.batch_size < 1 || t.learning_rate <= 0 || t.decay_interval < 1 ||
        t.validation_fraction < 0 || t.validation_fraction >= 1 || t.threads < 1)
        throw std::runtime_error("config: invalid train section");
    return t;
}

ControllerSpec controller_from_json(const json& j) {
    ControllerSpec c;
    c.name = j.at("name").get<std::string>();
    c.kind = j.at("kind").get<std::string>();
    if (c.kind == "gnn") {
        c.checkpoint = j.at("checkpoint").get<std::string>();
        c.select = get_or<std::string>(j, "select", "argmax") == "sample" ? SelectMode::sample
                                                                          : SelectMode::argmax;
    } else if (c.kind == "greedy") {
        const int k = get_or(j, "k", -1);
        c.max_hops = k < 0 ? kUnboundedHops : k;
    } else if (c.kind == "expert-rh") {
        c.plan_horizon = get_or(j, "plan_horizon", c.plan_horizon);
        if (j.contains("expert")) c.expert = expert_from_json(j.at("expert"));
        if (c.plan_horizon < 1)
            throw std::runtime_error("config: expert-rh needs plan_horizon >= 1");
    } else if (c.kind == "expert-openloop") {
        if (j.contains("expert")) c.expert = expert_from_json(j.at("expert"));
    } else {
        throw std::runtime_error("config: unknown controller kind " + c.kind);
    }
    return c;
}

}  // namespace

MapSource ExperimentConfig::map_source() const {
    if (!map_files.empty()) return MapSource(map_files);
    return MapSource(gen);
}

CollectConfig ExperimentConfig::collect_config() const {
    CollectConfig c;
    c.n_trajectories = collect_trajectories;
    c.horizon = collect_horizon;
    c.n_robots = episode.n_robots;
    c.interest_fraction = episode.interest_fraction;
    c.mode = episode.mode;
    c.sensor_range_spacings = episode.sensor_range_spacings;
    c.sensor_range_m = episode.sensor_range_m;
    c.expert = collect_expert;
    c.seed = seed;
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config: parse error in " + path + ": " + e.what());
    }

    ExperimentConfig c;
    c.seed = get_or<uint64_t>(j, "seed", 0);
    c.out_dir = get_or<std::string>(j, "out", "out");
    if (j.contains("map")) {
        const auto& m = j.at("map");
        if (m.contains("files")) {
            c.map_files = m.at("files").get<std::vector<std::string>>();
            for (const auto& f : c.map_files)
                if (!fs::exists(f)) throw std::runtime_error("config: map file missing: " + f);
        }
        if (m.contains("generator")) c.gen = gen_from_json(m.at("generator"));
    }
    if (j.contains("episode")) c.episode = episode_from_json(j.at("episode"));
    if (j.contains("collect")) {
        const auto& col = j.at("collect");
        c.collect_trajectories = get_or(col, "trajectories", c.collect_trajectories);
        c.collect_horizon = get_or(col, "horizon", c.episode.horizon);
        if (col.contains("expert")) c.collect_expert = expert_from_json(col.at("expert"));
        if (c.collect_trajectories < 1 || c.collect_horizon < 1)
            throw std::runtime_error("config: collect needs trajectories >= 1, horizon >= 1");
    } else {
        c.collect_horizon = c.episode.horizon;
    }
    if (j.contains("arch")) c.arch = arch_from_json_cfg(j.at("arch"));
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
    c.train.seed = c.seed;
    c.dataset_path = get_or<std::string>(j, "dataset", "");
    c.checkpoint_path = get_or<std::string>(j, "checkpoint", "");
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        c.eval_episodes = get_or(e, "episodes", c.eval_episodes);
        c.eval_threads = get_or(e, "threads", c.eval_threads);
        c.team_sizes = get_or(e, "team_sizes", c.team_sizes);
        if (e.contains("controllers"))
            for (const auto& spec : e.at("controllers"))
                c.controllers.push_back(controller_from_json(spec));
        if (c.eval_episodes < 1 || c.eval_threads < 1)
            throw std::runtime_error("config: eval needs episodes >= 1 and threads >= 1");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Controllers and evaluation
// ---------------------------------------------------------------------------

namespace {

uint64_t name_tag(const std::string& name) {
    uint64_t h = 1469598103934665603ULL;
    for (char ch : name) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
    return h;
}

struct PreparedController {
    std::string variant{"-"};
    int k{-1};
    ControllerFactory factory;
};

PreparedController prepare_controller(const ControllerSpec& spec, uint64_t seed) {
    PreparedController out;
    const uint64_t base = Rng::derive(seed, name_tag(spec.name));
    if (spec.kind == "gnn") {
        auto params = std::make_shared<const PolicyParams>(load_checkpoint(spec.checkpoint));
        out.variant = to_string(params->arch.variant);
        out.k = params->arch.receptive_field;
        const SelectMode select = spec.select;
        out.factory = [params, select, base](int episode) -> Controller {
            auto rng = std::make_shared<Rng>(Rng::derive(base, static_cast<uint64_t>(episode)));
            return [params, select, rng](const WorldState& state) {
                const GraphSignal signal = observe(state);
                const auto logits = edge_logits(*params, signal);
                return select_actions(logits, signal, select, params->arch.temperature,
                                      rng.get());
            };
        };
    } else if (spec.kind == "greedy") {
        out.k = spec.max_hops == kUnboundedHops ? -1 : spec.max_hops;
        const int hops = spec.max_hops;
        out.factory = [hops](int) { return make_greedy_controller(hops); };
    } else if (spec.kind == "expert-rh") {
        const int plan_horizon = spec.plan_horizon;
        ExpertConfig expert = spec.expert;
        out.factory = [plan_horizon, expert, base](int episode) {
            ExpertConfig e = expert;
            e.seed = Rng::derive(base, static_cast<uint64_t>(episode));
            return make_receding_horizon_controller(plan_horizon, e);
        };
    } else if (spec.kind == "expert-openloop") {
        ExpertConfig expert = spec.expert;
        out.factory = [expert, base](int episode) {
            ExpertConfig e = expert;
            e.seed = Rng::derive(base, static_cast<uint64_t>(episode));
            return make_open_loop_expert_controller(e);
        };
    } else {
        throw std::runtime_error("unknown controller kind: " + spec.kind);
    }
    return out;
}

Controller timed(Controller inner, const std::shared_ptr<double>& acc_ms) {
    return [inner = std::move(inner), acc_ms](const WorldState& state) {
        const auto t0 = std::chrono::steady_clock::now();
        JointAction action = inner(state);
        const auto t1 = std::chrono::steady_clock::now();
        *acc_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        return action;
    };
}

std::string format_double(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
    return buf;
}

}  // namespace

ControllerFactory controller_factory(const ControllerSpec& spec, uint64_t seed) {
    return prepare_controller(spec, seed).factory;
}

EvalReport run_eval(const ExperimentConfig& config) {
    if (config.controllers.empty())
        throw std::runtime_error("run_eval: no controllers configured");
    const MapSource maps = config.map_source();
    std::vector<int> sizes = config.team_sizes;
    if (sizes.empty()) sizes.push_back(config.episode.n_robots);

    EvalReport report;
    for (int n_robots : sizes) {
        EpisodeSetup setup = config.episode;
        setup.n_robots = n_robots;
        for (const auto& spec : config.controllers) {
            PreparedController prepared = prepare_controller(spec, config.seed);
            // Episodes carry independent streams and write into their own
            // slot, so parallel execution leaves rows and summaries
            // identical to the serial order.
            std::vector<MetricsRow> rows(config.eval_episodes);
            auto run_episode = [&](int episode) {
                WorldState state = episode_world(maps, setup, episode, config.seed);
                auto acc = std::make_shared<double>(0.0);
                const Controller controller = timed(prepared.factory(episode), acc);
                const auto result = rollout(state, controller, setup.horizon);
                rows[episode] = {spec.name, prepared.variant, prepared.k, setup.mode,
                                 state.graph->size(), n_robots, episode,
                                 result.total_reward, *acc};
            };
            const int n_workers = std::min(config.eval_threads, config.eval_episodes);
            if (n_workers <= 1) {
                for (int episode = 0; episode < config.eval_episodes; ++episode)
                    run_episode(episode);
            } else {
                std::atomic<int> next{0};
                std::vector<std::thread> workers;
                for (int w = 0; w < n_workers; ++w) {
                    workers.emplace_back([&]() {
                        for (int e = next.fetch_add(1); e < config.eval_episodes;
                             e = next.fetch_add(1))
                            run_episode(e);
                    });
                }
                for (auto& worker : workers) worker.join();
            }
            std::vector<int> rewards;
            double total_ms = 0;
            for (const auto& row : rows) {
                rewards.push_back(row.reward);
                total_ms += row.controller_ms;
                report.rows.push_back(row);
            }
            report.summaries.push_back({spec.name, prepared.variant, prepared.k, setup.mode,
                                        n_robots, config.eval_episodes, mean_of(rewards),
                                        sem_of(rewards),
                                        total_ms / std::max(1, config.eval_episodes)});
        }
    }
    return report;
}

void write_metrics(const EvalReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/metrics.csv");
        out << "controller,variant,k,mode,map_nodes,n_robots,episode,reward\n";
        for (const auto& r : report.rows)
            out << r.controller << ',' << r.variant << ',' << r.k << ',' << mode_name(r.mode)
                << ',' << r.map_nodes << ',' << r.n_robots << ',' << r.episode << ','
                << r.reward << "\n";
    }
    {
        std::ofstream out(out_dir + "/summary.csv");
        out << "controller,variant,k,mode,n_robots,episodes,mean_reward,sem\n";
        for (const auto& s : report.summaries)
            out << s.controller << ',' << s.variant << ',' << s.k << ',' << mode_name(s.mode)
                << ',' << s.n_robots << ',' << s.episodes << ','
                << format_double(s.mean_reward) << ',' << format_double(s.sem) << "\n";
    }
    {
        std::ofstream out(out_dir + "/timings.csv");
        out << "controller,variant,k,mode,n_robots,episode,controller_ms\n";
        for (const auto& r : report.rows)
            out << r.controller << ',' << r.variant << ',' << r.k << ',' << mode_name(r.mode)
                << ',' << r.n_robots << ',' << r.episode << ','
                << format_double(r.controller_ms, 3) << "\n";
    }
}

std::vector<PairedComparison> paired_comparisons(const EvalReport& report) {
    // Group rewards by (controller, n_robots) keeping episode order.
    struct Key {
        std::string controller;
        int n_robots;
    };
    std::vector<Key> keys;
    std::vector<std::vector<int>> rewards;
    for (const auto& r : report.rows) {
        int idx = -1;
        for (size_t i = 0; i < keys.size(); ++i)
            if (keys[i].controller == r.controller && keys[i].n_robots == r.n_robots)
                idx = static_cast<int>(i);
        if (idx < 0) {
            keys.push_back({r.controller, r.n_robots});
            rewards.emplace_back();
            idx = static_cast<int>(keys.size()) - 1;
        }
        rewards[idx].push_back(r.reward);
    }

    std::vector<PairedComparison> out;
    for (size_t a = 0; a < keys.size(); ++a) {
        for (size_t b = a + 1; b < keys.size(); ++b) {
            if (keys[a].n_robots != keys[b].n_robots) continue;
            const size_t n = std::min(rewards[a].size(), rewards[b].size());
            std::vector<int> diffs(n);
            for (size_t i = 0; i < n; ++i) diffs[i] = rewards[a][i] - rewards[b][i];
            out.push_back({keys[a].controller, keys[b].controller, keys[a].n_robots,
                           mean_of(diffs), sem_of(diffs), static_cast<int>(n)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CLI verbs
// ---------------------------------------------------------------------------

std::vector<std::string> cli_generate_maps(const ExperimentConfig& config, int count) {
    if (count < 1) throw std::runtime_error("generate-maps: count must be >= 1");
    fs::create_directories(config.out_dir);
    std::vector<std::string> paths;
    for (int i = 0; i < count; ++i) {
        Rng rng(Rng::derive(config.seed, static_cast<uint64_t>(i)));
        const SpatialGraph graph = generate_map(config.gen, rng);
        char name[32];
        std::snprintf(name, sizeof(name), "map_%03d.json", i);
        const std::string path = config.out_dir + "/" + name;
        save_map(graph, path);
        std::cout << name << " nodes=" << graph.size() << " edges=" << graph.num_edges()
                  << " diameter=" << graph_diameter(graph) << "\n";
        paths.push_back(path);
    }
    return paths;
}

std::vector<std::string> cli_collect(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    const MapSource maps = config.map_source();
    const CollectConfig collect = config.collect_config();
    Dataset dataset = collect_dataset(maps, collect);

    json provenance;
    provenance["seed"] = config.seed;
    provenance["map"] = config.map_files.empty()
                            ? json{{"generator", gen_to_json(config.gen)}}
                            : json{{"files", config.map_files}};
    provenance["episode"] = episode_to_json(config.episode);
    provenance["collect"] = {{"trajectories", config.collect_trajectories},
                             {"horizon", config.collect_horizon},
                             {"expert", expert_to_json(config.collect_expert)}};
    dataset.generation_config = provenance.dump();

    const std::string path =
        config.dataset_path.empty() ? config.out_dir + "/dataset.jsonl" : config.dataset_path;
    save_dataset(dataset, path);
    std::cout << "collected records=" << dataset.records.size()
              << " episodes=" << dataset.num_episodes() << " -> " << path << "\n";
    return {path};
}

std::vector<std::string> cli_train(const ExperimentConfig& config) {
    fs::create_directories(config.out_dir);
    const std::string dataset_path =
        config.dataset_path.empty() ? config.out_dir + "/dataset.jsonl" : config.dataset_path;
    const Dataset dataset = load_dataset(dataset_path);
    if (dataset.records.empty()) throw std::runtime_error("train: dataset has no records");

    ArchConfig arch = config.arch;
    arch.node_dim = dataset.records.front().signal.node_dim;
    for (const auto& r : dataset.records)
        if (r.signal.node_dim != arch.node_dim)
            throw std::runtime_error("train: dataset mixes node feature widths");

    const TrainResult result = train_bc(dataset, arch, config.train);

    const std::string ckpt_path = config.checkpoint_path.empty()
                                      ? config.out_dir + "/checkpoint.json"
                                      : config.checkpoint_path;
    save_checkpoint(result.params, ckpt_path);

    const std::string curve_path = config.out_dir + "/loss_curve.csv";
    {
        std::ofstream out(curve_path);
        out << "epoch,train_loss,val_loss\n";
        for (size_t e = 0; e < result.epoch_train_loss.size(); ++e) {
            out << e << ',' << format_double(result.epoch_train_loss[e], 9) << ',';
            if (e < result.epoch_val_loss.size())
                out << format_double(result.epoch_val_loss[e], 9);
            out << "\n";
        }
    }
    std::cout << "trained epochs=" << result.epoch_train_loss.size()
              << " final_train_loss=" << format_double(result.epoch_train_loss.back(), 6)
              << " -> " << ckpt_path << "\n";
    return {ckpt_path, curve_path};
}

std::vector<std::string> cli_eval(const ExperimentConfig& config) {
    const EvalReport report = run_eval(config);
    write_metrics(report, config.out_dir);
    for (const auto& s : report.summaries)
        std::cout << s.controller << " n_robots=" << s.n_robots
                  << " mean=" << format_double(s.mean_reward, 2)
                  << " sem=" << format_double(s.sem, 2)
                  << " ms/episode=" << format_double(s.mean_controller_ms, 1) << "\n";
    return {config.out_dir + "/metrics.csv", config.out_dir + "/summary.csv",
            config.out_dir + "/timings.csv"};
}

std::vector<std::string> cli_compare(const ExperimentConfig& config) {
    const EvalReport report = run_eval(config);
    write_metrics(report, config.out_dir);
    const auto pairs = paired_comparisons(report);
    const std::string path = config.out_dir + "/compare.csv";
    std::ofstream out(path);
    out << "controller_a,controller_b,n_robots,episodes,mean_diff,sem_diff\n";
    for (const auto& p : pairs) {
        out << p.controller_a << ',' << p.controller_b << ',' << p.n_robots << ','
            << p.episodes << ',' << format_double(p.mean_diff) << ','
            << format_double(p.sem_diff) << "\n";
        std::cout << p.controller_a << " - " << p.controller_b
                  << " n_robots=" << p.n_robots
                  << " mean_diff=" << format_double(p.mean_diff, 2)
                  << " sem=" << format_double(p.sem_diff, 2) << "\n";
    }
    return {path};
}

}  // namespace covgnn
