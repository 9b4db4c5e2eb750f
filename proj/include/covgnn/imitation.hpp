#pragma once

#include <string>
#include <vector>

#include "covgnn/baselines.hpp"
#include "covgnn/gnn.hpp"
#include "covgnn/map_gen.hpp"

namespace covgnn {

inline constexpr int kStayLabel = -1;

// One expert-labeled observation: what each robot saw and the candidate slot
// the expert's executed move landed in (kStayLabel when the robot held or was
// blocked; such robots carry no loss term).
struct LabeledRecord {
    int episode{0};
    int t{0};
    uint64_t map_seed{0};
    GraphSignal signal;
    std::vector<int> slot_label;       // per robot: 0..3 or kStayLabel
    std::vector<int> move_waypoint;    // per robot: executed target or kStay
};

struct CollectConfig {
    int n_trajectories{2000};
    int horizon{50};
    int n_robots{4};
    double interest_fraction{1.0};
    Mode mode{Mode::coverage};
    double sensor_range_spacings{2.0};
    double sensor_range_m{0};  // > 0 overrides the spacing-relative value
    ExpertConfig expert;
    uint64_t seed{0};
};

struct Dataset {
    int schema_version{1};
    std::string generation_config;  // JSON text stored in the file header
    std::vector<LabeledRecord> records;

    int num_episodes() const;
};

Dataset collect_dataset(const MapSource& maps, const CollectConfig& config);

// Record-per-line text format with a JSON header line.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Rebuilds every episode from the stored seeds, re-executes the logged moves,
// and checks the logged observations match exactly. Throws on any mismatch.
void replay_check(const Dataset& dataset, const MapSource& maps, const CollectConfig& config);

struct TrainConfig {
    int epochs{200};
    int batch_size{32};
    double learning_rate{0.001};
    double decay_factor{0.95};
    int decay_interval{200};   // batches
    double validation_fraction{0.1};
    int threads{1};
    uint64_t seed{0};
};

struct TrainResult {
    PolicyParams params;
    std::vector<double> batch_loss;        // every optimizer step
    std::vector<double> epoch_train_loss;  // mean per epoch
    std::vector<double> epoch_val_loss;    // NaN-free; empty when no val split
};

// Behavior cloning: masked cross-entropy over candidate slots, per-robot
// terms averaged within a record, records averaged over the batch.
TrainResult train_bc(const Dataset& dataset, const ArchConfig& arch, const TrainConfig& config);

// Forward-only mean loss over records (uniform record weights).
double dataset_loss(const PolicyParams& params, const std::vector<LabeledRecord>& records);

// Fraction of non-stay labels the argmax policy reproduces, and the majority
// baseline (most frequent slot / total labels) on the same records.
double action_accuracy(const PolicyParams& params, const std::vector<LabeledRecord>& records);
double majority_slot_baseline(const std::vector<LabeledRecord>& records);

struct EpisodeSetup {
    int n_robots{2};
    int horizon{25};
    double interest_fraction{1.0};
    Mode mode{Mode::coverage};
    double sensor_range_spacings{2.0};
    double sensor_range_m{0};  // > 0 overrides the spacing-relative value
};

struct EvalResult {
    double mean_reward{0};
    double sem{0};  // sample stddev / sqrt(n); 0 for n < 2
    std::vector<int> rewards;
};

// Deterministic world for episode index i of an evaluation stream. Identical
// (maps, setup, seed, i) give identical worlds, so controllers can be compared
// on matched episodes.
WorldState episode_world(const MapSource& maps, const EpisodeSetup& setup, int episode,
                         uint64_t seed);

EvalResult evaluate(const Controller& controller, const MapSource& maps,
                    const EpisodeSetup& setup, int n_episodes, uint64_t seed);

double mean_of(const std::vector<int>& values);
double sem_of(const std::vector<int>& values);

}  // namespace covgnn
