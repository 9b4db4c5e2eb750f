// Command-line front end: map generation, expert dataset collection, behavior
// cloning, evaluation, and matched-seed controller comparison.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "covgnn/harness.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> controller;
    std::optional<int> k;
    std::optional<std::string> variant;
    std::optional<std::string> mode;
    int count{1};
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", o.seed, "override config seed");
    cmd->add_option("--out", o.out, "override output directory");
    cmd->add_option("--controller", o.controller, "restrict eval/compare to one controller");
    cmd->add_option("--k", o.k, "override receptive field (train arch, greedy hop bound)");
    cmd->add_option("--variant", o.variant, "override GNN variant (linear|nonlinear)");
    cmd->add_option("--mode", o.mode, "override task mode (coverage|exploration)");
}

covgnn::ExperimentConfig resolve(const Overrides& o) {
    covgnn::ExperimentConfig config = covgnn::load_experiment_config(o.config_path);
    if (o.seed) {
        config.seed = *o.seed;
        config.train.seed = *o.seed;
    }
    if (o.out) config.out_dir = *o.out;
    if (o.mode) config.episode.mode = covgnn::mode_from_string(*o.mode);
    if (o.variant) config.arch.variant = covgnn::variant_from_string(*o.variant);
    if (o.k) {
        config.arch.receptive_field = *o.k;
        for (auto& spec : config.controllers)
            if (spec.kind == "greedy")
                spec.max_hops = *o.k < 0 ? covgnn::kUnboundedHops : *o.k;
    }
    if (o.controller) {
        std::vector<covgnn::ControllerSpec> kept;
        for (const auto& spec : config.controllers)
            if (spec.name == *o.controller) kept.push_back(spec);
        if (kept.empty())
            throw std::runtime_error("no controller named " + *o.controller + " in config");
        config.controllers = std::move(kept);
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-robot coverage / exploration toolkit"};
    app.require_subcommand(1);

    Overrides o;
    CLI::App* gen = app.add_subcommand("generate-maps", "write lattice map files");
    add_common(gen, o);
    gen->add_option("--count", o.count, "number of maps");

    CLI::App* collect = app.add_subcommand("collect", "collect expert trajectories");
    add_common(collect, o);
    CLI::App* train = app.add_subcommand("train", "behavior-clone the GNN policy");
    add_common(train, o);
    CLI::App* eval = app.add_subcommand("eval", "evaluate configured controllers");
    add_common(eval, o);
    CLI::App* compare = app.add_subcommand("compare", "paired controller comparison");
    add_common(compare, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const covgnn::ExperimentConfig config = resolve(o);
        if (gen->parsed()) covgnn::cli_generate_maps(config, o.count);
        if (collect->parsed()) covgnn::cli_collect(config);
        if (train->parsed()) covgnn::cli_train(config);
        if (eval->parsed()) covgnn::cli_eval(config);
        if (compare->parsed()) covgnn::cli_compare(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
