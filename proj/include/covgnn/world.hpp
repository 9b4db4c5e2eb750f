#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "covgnn/rng.hpp"
#include "covgnn/spatial_graph.hpp"

namespace covgnn {

enum class Mode { coverage, exploration };

// Per-robot move target: a neighboring waypoint id, or kStay.
inline constexpr int kStay = -1;

struct JointAction {
    std::vector<int> target;
};

// Mutable mission state. One owner; copies are cheap enough for search.
struct WorldState {
    std::shared_ptr<const SpatialGraph> graph;
    std::vector<int> robot_at;    // robot index -> waypoint id
    std::vector<char> interest;   // waypoint id -> still of interest
    std::vector<char> explored;   // waypoint id -> revealed (all 1 in coverage)
    int timestep{0};
    int horizon{0};
    Mode mode{Mode::coverage};
    double sensor_range{0};       // meters, exploration only

    int num_robots() const { return static_cast<int>(robot_at.size()); }
    int interest_count() const;
    bool waypoint_occupied(int waypoint) const;
};

// Robots on distinct uniform waypoints; interest = random fraction of the
// waypoints excluding robot starts; exploration mode reveals everything
// within sensor_range of a start position.
WorldState reset(std::shared_ptr<const SpatialGraph> graph, int n_robots,
                 double interest_fraction, Mode mode, double sensor_range,
                 int horizon, Rng& rng);

// Advance one timestep. Robots are processed in ascending index; a move is
// blocked when its target is already the resolved position of a
// smaller-indexed robot or the current waypoint of a larger-indexed robot
// (smaller indices get priority, and only a waypoint vacated by a
// smaller-indexed robot may be entered the same step). Blocked robots stay.
// Returns the number of interest waypoints newly covered; their flags flip.
// In exploration mode, waypoints within sensor_range of any robot are then
// revealed. Throws on non-adjacent move targets.
int step(WorldState& state, const JointAction& action);

using Controller = std::function<JointAction(const WorldState&)>;

struct Trajectory {
    std::vector<JointAction> actions;
    std::vector<int> rewards;
    std::vector<std::vector<int>> positions;  // robot waypoints after each step
};

struct RolloutResult {
    int total_reward{0};
    Trajectory trajectory;
};

// Closed-loop execution of the controller for up to `steps` steps (bounded by
// the state's remaining horizon).
RolloutResult rollout(WorldState& state, const Controller& controller, int steps);

}  // namespace covgnn
