#pragma once

#include <optional>
#include <string>
#include <vector>

#include "covgnn/imitation.hpp"

namespace covgnn {

struct ControllerSpec {
    std::string name;
    std::string kind;               // gnn | greedy | expert-rh | expert-openloop
    std::string checkpoint;         // gnn
    SelectMode select{SelectMode::argmax};
    int max_hops{kUnboundedHops};   // greedy receptive field, -1 = unbounded
    int plan_horizon{10};           // expert-rh
    ExpertConfig expert;
};

struct ExperimentConfig {
    uint64_t seed{0};
    std::string out_dir{"out"};

    MapGenParams gen;
    std::vector<std::string> map_files;  // non-empty overrides the generator

    EpisodeSetup episode;

    int collect_trajectories{200};
    int collect_horizon{25};
    ExpertConfig collect_expert;

    ArchConfig arch;
    TrainConfig train;
    std::string dataset_path;            // defaults to <out>/dataset.jsonl
    std::string checkpoint_path;         // defaults to <out>/checkpoint.json

    int eval_episodes{100};
    int eval_threads{1};                 // episodes run on independent streams
    std::vector<int> team_sizes;         // empty: episode.n_robots only
    std::vector<ControllerSpec> controllers;

    MapSource map_source() const;
    CollectConfig collect_config() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct MetricsRow {
    std::string controller;
    std::string variant;   // "-" for non-GNN controllers
    int k{-1};             // receptive field / hop bound, -1 = unbounded or n/a
    Mode mode{Mode::coverage};
    int map_nodes{0};
    int n_robots{0};
    int episode{0};
    int reward{0};
    double controller_ms{0};
};

struct EvalSummary {
    std::string controller;
    std::string variant;
    int k{-1};
    Mode mode{Mode::coverage};
    int n_robots{0};
    int episodes{0};
    double mean_reward{0};
    double sem{0};
    double mean_controller_ms{0};
};

struct EvalReport {
    std::vector<MetricsRow> rows;
    std::vector<EvalSummary> summaries;
};

// One factory invocation per episode so stateful controllers start fresh.
using ControllerFactory = std::function<Controller(int episode)>;

ControllerFactory controller_factory(const ControllerSpec& spec, uint64_t seed);

// Matched-seed evaluation of every controller (crossed with team sizes);
// controller compute time is measured around controller calls only.
EvalReport run_eval(const ExperimentConfig& config);

// metrics.csv and summary.csv hold the deterministic columns; wall-clock
// timings go to timings.csv so reruns with one seed are byte-identical.
void write_metrics(const EvalReport& report, const std::string& out_dir);

struct PairedComparison {
    std::string controller_a;
    std::string controller_b;
    int n_robots{0};
    double mean_diff{0};  // a - b over matched episodes
    double sem_diff{0};
    int episodes{0};
};

std::vector<PairedComparison> paired_comparisons(const EvalReport& report);

// CLI verbs; each returns artifact paths written under config.out_dir.
std::vector<std::string> cli_generate_maps(const ExperimentConfig& config, int count);
std::vector<std::string> cli_collect(const ExperimentConfig& config);
std::vector<std::string> cli_train(const ExperimentConfig& config);
std::vector<std::string> cli_eval(const ExperimentConfig& config);
std::vector<std::string> cli_compare(const ExperimentConfig& config);

std::string mode_name(Mode mode);
Mode mode_from_string(const std::string& name);

}  // namespace covgnn
