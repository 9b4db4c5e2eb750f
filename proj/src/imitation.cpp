#include "covgnn/imitation.hpp"

#include "covgnn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <atomic>
#include <thread>

#include "json.hpp"

namespace covgnn {

namespace {

// Stream tags so maps, resets, and expert plans draw independent seeds.
enum SeedKind : uint64_t { kMapStream = 1, kResetStream = 2, kExpertStream = 3 };

WorldState reset_episode(std::shared_ptr<const SpatialGraph> graph, int n_robots,
                         double interest_fraction, Mode mode, double sensor_spacings,
                         int horizon, uint64_t reset_seed, double sensor_meters = 0) {
    Rng rng(reset_seed);
    const double sensor_range =
        sensor_meters > 0 ? sensor_meters : sensor_spacings * graph->spacing;
    return reset(std::move(graph), n_robots, interest_fraction, mode, sensor_range, horizon,
                 rng);
}

int slot_of_move(const GraphSignal& signal, int robot, int move) {
    if (move == kStay) return kStayLabel;
    for (int s = 0; s < 4; ++s)
        if (signal.action_targets[robot][s] == move) return s;
    return kStayLabel;
}

}  // namespace

int Dataset::num_episodes() const {
    std::set<int> ids;
    for (const auto& r : records) ids.insert(r.episode);
    return static_cast<int>(ids.size());
}

Dataset collect_dataset(const MapSource& maps, const CollectConfig& config) {
    Dataset dataset;
    for (int episode = 0; episode < config.n_trajectories; ++episode) {
        const uint64_t map_seed =
            Rng::derive(Rng::derive(config.seed, kMapStream), static_cast<uint64_t>(episode));
        auto graph = maps.sample(episode, Rng::derive(config.seed, kMapStream));
        WorldState state = reset_episode(
            graph, config.n_robots, config.interest_fraction, config.mode,
            config.sensor_range_spacings, config.horizon,
            Rng::derive(Rng::derive(config.seed, kResetStream), static_cast<uint64_t>(episode)),
            config.sensor_range_m);

        ExpertConfig expert = config.expert;
        expert.seed =
            Rng::derive(Rng::derive(config.seed, kExpertStream), static_cast<uint64_t>(episode));
        PlanExecutor executor(vrp_expert(state, config.horizon, expert));

        for (int t = 0; t < config.horizon; ++t) {
            LabeledRecord record;
            record.episode = episode;
            record.t = t;
            record.map_seed = map_seed;
            record.signal = observe(state);

            const std::vector<int> before = state.robot_at;
            const JointAction action = executor.next(state);
            step(state, action);

            record.slot_label.resize(state.num_robots());
            record.move_waypoint.resize(state.num_robots());
            for (int i = 0; i < state.num_robots(); ++i) {
                const int taken = state.robot_at[i] == before[i] ? kStay : state.robot_at[i];
                record.move_waypoint[i] = taken;
                record.slot_label[i] = slot_of_move(record.signal, i, taken);
                if (taken != kStay && record.slot_label[i] == kStayLabel)
                    throw std::runtime_error(
                        "collect_dataset: expert move missing from the observation's "
                        "candidate slots");
            }
            dataset.records.push_back(std::move(record));
        }
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Dataset file format: one JSON header line, then one JSON record per line.
// ---------------------------------------------------------------------------

namespace {

nlohmann::json signal_to_json(const GraphSignal& s) {
    nlohmann::json j;
    j["n"] = s.n_nodes;
    j["d"] = s.node_dim;
    j["x"] = s.node_features;
    j["s"] = s.senders;
    j["r"] = s.receivers;
    j["e"] = s.edge_features;
    j["sp"] = s.spacing;
    j["w"] = s.waypoint_ids;
    j["rn"] = s.robot_node_ids;
    auto& ae = j["ae"] = nlohmann::json::array();
    auto& at = j["at"] = nlohmann::json::array();
    for (size_t i = 0; i < s.action_edge_ids.size(); ++i) {
        ae.push_back(s.action_edge_ids[i]);
        at.push_back(s.action_targets[i]);
    }
    return j;
}

GraphSignal signal_from_json(const nlohmann::json& j) {
    GraphSignal s;
    s.n_nodes = j.at("n").get<int>();
    s.node_dim = j.at("d").get<int>();
    s.node_features = j.at("x").get<std::vector<double>>();
    s.senders = j.at("s").get<std::vector<int>>();
    s.receivers = j.at("r").get<std::vector<int>>();
    s.edge_features = j.at("e").get<std::vector<double>>();
    s.spacing = j.at("sp").get<double>();
    s.waypoint_ids = j.at("w").get<std::vector<int>>();
    s.robot_node_ids = j.at("rn").get<std::vector<int>>();
    for (const auto& row : j.at("ae")) s.action_edge_ids.push_back(row.get<std::array<int, 4>>());
    for (const auto& row : j.at("at")) s.action_targets.push_back(row.get<std::array<int, 4>>());
    if (s.node_features.size() != static_cast<size_t>(s.n_nodes) * s.node_dim ||
        s.senders.size() != s.receivers.size() || s.senders.size() != s.edge_features.size() ||
        s.action_edge_ids.size() != s.robot_node_ids.size())
        throw std::runtime_error("dataset: malformed graph signal");
    return s;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    nlohmann::json header;
    header["schema_version"] = dataset.schema_version;
    header["kind"] = "coverage-bc-dataset";
    header["config"] =
        dataset.generation_config.empty()
            ? nlohmann::json::object()
            : nlohmann::json::parse(dataset.generation_config);
    out << header.dump() << "\n";
    for (const auto& r : dataset.records) {
        nlohmann::json j;
        j["ep"] = r.episode;
        j["t"] = r.t;
        j["seed"] = r.map_seed;
        j["labels"] = r.slot_label;
        j["moves"] = r.move_waypoint;
        j["sig"] = signal_to_json(r.signal);
        out << j.dump() << "\n";
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dataset: empty file");
    Dataset dataset;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("kind").get<std::string>() != "coverage-bc-dataset")
            throw std::runtime_error("not a dataset file");
        dataset.schema_version = header.at("schema_version").get<int>();
        if (dataset.schema_version != 1)
            throw std::runtime_error("unsupported schema version");
        dataset.generation_config = header.at("config").dump();
        size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            LabeledRecord r;
            r.episode = j.at("ep").get<int>();
            r.t = j.at("t").get<int>();
            r.map_seed = j.at("seed").get<uint64_t>();
            r.slot_label = j.at("labels").get<std::vector<int>>();
            r.move_waypoint = j.at("moves").get<std::vector<int>>();
            r.signal = signal_from_json(j.at("sig"));
            if (r.slot_label.size() != r.signal.action_edge_ids.size() ||
                r.move_waypoint.size() != r.slot_label.size())
                throw std::runtime_error("label count mismatch at line " +
                                         std::to_string(line_no));
            dataset.records.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_dataset: parse error in " + path + ": " + e.what());
    }
    return dataset;
}

void replay_check(const Dataset& dataset, const MapSource& maps, const CollectConfig& config) {
    size_t idx = 0;
    while (idx < dataset.records.size()) {
        const int episode = dataset.records[idx].episode;
        auto graph = maps.sample(episode, Rng::derive(config.seed, kMapStream));
        WorldState state = reset_episode(
            graph, config.n_robots, config.interest_fraction, config.mode,
            config.sensor_range_spacings, config.horizon,
            Rng::derive(Rng::derive(config.seed, kResetStream), static_cast<uint64_t>(episode)),
            config.sensor_range_m);
        while (idx < dataset.records.size() && dataset.records[idx].episode == episode) {
            const LabeledRecord& r = dataset.records[idx];
            if (!(observe(state) == r.signal))
                throw std::runtime_error("replay_check: observation mismatch at episode " +
                                         std::to_string(episode) + " t=" + std::to_string(r.t));
            JointAction action;
            for (int move : r.move_waypoint) action.target.push_back(move);
            step(state, action);
            for (int i = 0; i < state.num_robots(); ++i)
                if (r.move_waypoint[i] != kStay && state.robot_at[i] != r.move_waypoint[i])
                    throw std::runtime_error("replay_check: logged move did not re-execute");
            ++idx;
        }
    }
}

// ---------------------------------------------------------------------------
// Behavior cloning
// ---------------------------------------------------------------------------

namespace {

struct BatchLoss {
    double loss{0};
    std::vector<Tensor> grads;  // aligned with param_ptrs order, empty if eval
};

// Fuse records into one block-diagonal graph, run the policy once, and read
// the weighted masked cross-entropy. Edge features are pre-normalized here so
// mixed-spacing records batch cleanly.
BatchLoss run_batch(PolicyParams& params, const std::vector<const LabeledRecord*>& records,
                    double record_weight, bool with_grads) {
    int total_nodes = 0, total_edges = 0;
    for (const auto* r : records) {
        total_nodes += r->signal.n_nodes;
        total_edges += r->signal.num_edges();
    }

    GraphSignal fused;
    fused.n_nodes = total_nodes;
    fused.node_dim = params.arch.node_dim;
    fused.spacing = 1.0;
    fused.node_features.reserve(static_cast<size_t>(total_nodes) * fused.node_dim);
    fused.senders.reserve(total_edges);
    fused.receivers.reserve(total_edges);
    fused.edge_features.reserve(total_edges);

    std::vector<std::array<int, 4>> slots;
    std::vector<std::array<char, 4>> valid;
    std::vector<int> labels;
    std::vector<double> weights;

    int node_offset = 0, edge_offset = 0;
    for (const auto* r : records) {
        const GraphSignal& s = r->signal;
        if (s.node_dim != params.arch.node_dim)
            throw std::invalid_argument("train_bc: record node width differs from architecture");
        fused.node_features.insert(fused.node_features.end(), s.node_features.begin(),
                                   s.node_features.end());
        for (int e = 0; e < s.num_edges(); ++e) {
            fused.senders.push_back(s.senders[e] + node_offset);
            fused.receivers.push_back(s.receivers[e] + node_offset);
            fused.edge_features.push_back(s.edge_features[e] / s.spacing);
        }
        int n_labeled = 0;
        for (int label : r->slot_label) n_labeled += label != kStayLabel;
        if (n_labeled > 0) {
            const double w = record_weight / n_labeled;
            for (size_t i = 0; i < r->slot_label.size(); ++i) {
                if (r->slot_label[i] == kStayLabel) continue;
                std::array<int, 4> row{kNoEdge, kNoEdge, kNoEdge, kNoEdge};
                std::array<char, 4> ok{0, 0, 0, 0};
                for (int sl = 0; sl < 4; ++sl) {
                    if (s.action_edge_ids[i][sl] == kNoEdge) continue;
                    row[sl] = s.action_edge_ids[i][sl] + edge_offset;
                    ok[sl] = 1;
                }
                slots.push_back(row);
                valid.push_back(ok);
                labels.push_back(r->slot_label[i]);
                weights.push_back(w);
            }
        }
        node_offset += s.n_nodes;
        edge_offset += s.num_edges();
    }

    BatchLoss out;
    if (labels.empty()) return out;

    Tape tape(with_grads);
    const auto vars = lift_policy(tape, params);
    const VarId logits = policy_forward(tape, vars, params.arch, fused);
    const VarId slot_logits = tape.gather_slots(logits, std::move(slots));
    const VarId loss =
        tape.masked_nll(slot_logits, std::move(valid), std::move(labels), std::move(weights));
    out.loss = tape.val(loss).v[0];
    if (with_grads) {
        tape.backward(loss);
        std::vector<VarId> ordered;
        auto& mutable_vars = const_cast<PolicyT<VarId>&>(vars);
        visit_policy(mutable_vars, [&](const std::string&, VarId& v) {
            if (v >= 0) ordered.push_back(v);
        });
        out.grads.reserve(ordered.size());
        for (VarId v : ordered) out.grads.push_back(tape.grad(v));
    }
    return out;
}

// Fused graphs are kept small enough to stay cache-resident; gradients are
// summed over chunks in index order, so results do not depend on the thread
// count.
constexpr size_t kFusionChunk = 2;

double forward_loss(PolicyParams& params, const std::vector<const LabeledRecord*>& records) {
    int with_labels = 0;
    for (const auto* r : records)
        for (int label : r->slot_label)
            if (label != kStayLabel) {
                ++with_labels;
                break;
            }
    if (with_labels == 0) return 0.0;
    double total = 0;
    for (size_t begin = 0; begin < records.size(); begin += kFusionChunk) {
        std::vector<const LabeledRecord*> slice(
            records.begin() + begin,
            records.begin() + std::min(records.size(), begin + kFusionChunk));
        total += run_batch(params, slice, 1.0 / with_labels, false).loss;
    }
    return total;
}

}  // namespace

TrainResult train_bc(const Dataset& dataset, const ArchConfig& arch, const TrainConfig& config) {
    if (dataset.records.empty()) throw std::invalid_argument("train_bc: empty dataset");
    if (config.epochs < 1 || config.batch_size < 1)
        throw std::invalid_argument("train_bc: bad epoch/batch configuration");
    if (config.threads < 1) throw std::invalid_argument("train_bc: threads must be >= 1");

    // Hold out whole trajectories for validation.
    std::vector<int> episodes;
    for (const auto& r : dataset.records)
        if (episodes.empty() || episodes.back() != r.episode) episodes.push_back(r.episode);
    std::sort(episodes.begin(), episodes.end());
    episodes.erase(std::unique(episodes.begin(), episodes.end()), episodes.end());
    Rng split_rng(Rng::derive(config.seed, 11));
    split_rng.shuffle(episodes);
    const int n_val = static_cast<int>(config.validation_fraction * episodes.size());
    std::set<int> val_episodes(episodes.end() - n_val, episodes.end());

    std::vector<const LabeledRecord*> train_records, val_records;
    for (const auto& r : dataset.records) {
        const bool has_label =
            std::any_of(r.slot_label.begin(), r.slot_label.end(),
                        [](int l) { return l != kStayLabel; });
        if (val_episodes.count(r.episode))
            val_records.push_back(&r);
        else if (has_label)
            train_records.push_back(&r);
    }
    if (train_records.empty())
        throw std::invalid_argument("train_bc: no records with action labels");

    TrainResult result;
    Rng init_rng(Rng::derive(config.seed, 12));
    result.params = init_policy(arch, init_rng);
    auto params_view = param_ptrs(result.params);

    AdamConfig adam_config;
    adam_config.learning_rate = config.learning_rate;
    adam_config.decay_factor = config.decay_factor;
    adam_config.decay_interval = config.decay_interval;
    AdamState adam(adam_config, params_view);

    Rng shuffle_rng(Rng::derive(config.seed, 13));
    std::vector<int> order(train_records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0;
        int batches = 0;
        for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const size_t end = std::min(order.size(), begin + config.batch_size);
            std::vector<const LabeledRecord*> batch;
            batch.reserve(end - begin);
            for (size_t i = begin; i < end; ++i) batch.push_back(train_records[order[i]]);
            const double record_weight = 1.0 / static_cast<double>(batch.size());

            // Fixed fusion-chunk boundaries and in-order reduction make the
            // gradient sum identical for every thread count.
            const int n_chunks =
                static_cast<int>((batch.size() + kFusionChunk - 1) / kFusionChunk);
            std::vector<BatchLoss> parts(n_chunks);
            auto run_chunk = [&](int c) {
                const size_t lo = c * kFusionChunk;
                const size_t hi = std::min(batch.size(), lo + kFusionChunk);
                std::vector<const LabeledRecord*> slice(batch.begin() + lo,
                                                        batch.begin() + hi);
                parts[c] = run_batch(result.params, slice, record_weight, true);
            };
            if (config.threads <= 1 || n_chunks <= 1) {
                for (int c = 0; c < n_chunks; ++c) run_chunk(c);
            } else {
                std::atomic<int> next_chunk{0};
                std::vector<std::thread> workers;
                const int n_workers = std::min(config.threads, n_chunks);
                for (int w = 0; w < n_workers; ++w) {
                    workers.emplace_back([&]() {
                        for (int c = next_chunk.fetch_add(1); c < n_chunks;
                             c = next_chunk.fetch_add(1))
                            run_chunk(c);
                    });
                }
                for (auto& worker : workers) worker.join();
            }
            std::vector<Tensor> grads;
            double loss = 0;
            for (int c = 0; c < n_chunks; ++c) {
                loss += parts[c].loss;
                if (parts[c].grads.empty()) continue;
                if (grads.empty()) {
                    grads = std::move(parts[c].grads);
                } else {
                    for (size_t g = 0; g < grads.size(); ++g)
                        for (size_t i = 0; i < grads[g].size(); ++i)
                            grads[g].v[i] += parts[c].grads[g].v[i];
                }
            }
            if (grads.empty()) continue;  // batch had only stay labels
            if (!std::isfinite(loss))
                throw std::runtime_error("train_bc: non-finite loss at epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(batches));
            std::vector<const Tensor*> grad_view;
            grad_view.reserve(grads.size());
            for (const auto& g : grads) grad_view.push_back(&g);
            adam.step(params_view, grad_view);
            result.batch_loss.push_back(loss);
            epoch_loss += loss;
            ++batches;
        }
        result.epoch_train_loss.push_back(batches ? epoch_loss / batches : 0.0);
        if (!val_records.empty())
            result.epoch_val_loss.push_back(forward_loss(result.params, val_records));
    }
    return result;
}

double dataset_loss(const PolicyParams& params, const std::vector<LabeledRecord>& records) {
    std::vector<const LabeledRecord*> view;
    view.reserve(records.size());
    for (const auto& r : records) view.push_back(&r);
    return forward_loss(const_cast<PolicyParams&>(params), view);
}

double action_accuracy(const PolicyParams& params, const std::vector<LabeledRecord>& records) {
    long total = 0, hits = 0;
    for (const auto& r : records) {
        bool any = false;
        for (int label : r.slot_label) any = any || label != kStayLabel;
        if (!any) continue;
        const auto logits = edge_logits(params, r.signal);
        for (size_t i = 0; i < r.slot_label.size(); ++i) {
            if (r.slot_label[i] == kStayLabel) continue;
            int best = -1;
            double best_logit = 0;
            for (int s = 0; s < 4; ++s) {
                const int edge = r.signal.action_edge_ids[i][s];
                if (edge == kNoEdge) continue;
                if (best < 0 || logits[edge] > best_logit) {
                    best = s;
                    best_logit = logits[edge];
                }
            }
            ++total;
            hits += best == r.slot_label[i];
        }
    }
    return total ? static_cast<double>(hits) / total : 0.0;
}

double majority_slot_baseline(const std::vector<LabeledRecord>& records) {
    long counts[4] = {0, 0, 0, 0};
    long total = 0;
    for (const auto& r : records) {
        for (int label : r.slot_label) {
            if (label == kStayLabel) continue;
            ++counts[label];
            ++total;
        }
    }
    const long best = *std::max_element(counts, counts + 4);
    return total ? static_cast<double>(best) / total : 0.0;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double mean_of(const std::vector<int>& values) {
    if (values.empty()) return 0;
    double sum = 0;
    for (int v : values) sum += v;
    return sum / values.size();
}

double sem_of(const std::vector<int>& values) {
    const size_t n = values.size();
    if (n < 2) return 0;
    const double mean = mean_of(values);
    double ss = 0;
    for (int v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
}

WorldState episode_world(const MapSource& maps, const EpisodeSetup& setup, int episode,
                         uint64_t seed) {
    auto graph = maps.sample(episode, Rng::derive(seed, kMapStream));
    return reset_episode(
        graph, setup.n_robots, setup.interest_fraction, setup.mode,
        setup.sensor_range_spacings, setup.horizon,
        Rng::derive(Rng::derive(seed, kResetStream), static_cast<uint64_t>(episode)),
        setup.sensor_range_m);
}

EvalResult evaluate(const Controller& controller, const MapSource& maps,
                    const EpisodeSetup& setup, int n_episodes, uint64_t seed) {
    EvalResult result;
    result.rewards.reserve(n_episodes);
    for (int episode = 0; episode < n_episodes; ++episode) {
        WorldState state = episode_world(maps, setup, episode, seed);
        result.rewards.push_back(rollout(state, controller, setup.horizon).total_reward);
    }
    result.mean_reward = mean_of(result.rewards);
    result.sem = sem_of(result.rewards);
    return result;
}

}  // namespace covgnn
