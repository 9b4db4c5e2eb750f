#pragma once

#include <vector>

#include "covgnn/world.hpp"

namespace covgnn {

// Team plan: per robot, a waypoint-by-waypoint path starting at the robot's
// current waypoint, consecutive entries adjacent or equal. At most `horizon`
// moves per robot.
struct RoutePlan {
    std::vector<std::vector<int>> paths;
    int horizon{0};

    JointAction action_at(int t) const;  // move scheduled for step t, stay past the end
    void validate(const WorldState& state) const;
};

// Walks a team plan through the environment. Collision resolution can hold a
// robot back for a step; the executor tracks each robot's progress along its
// path and retries the pending leg instead of blindly replaying by timestep.
class PlanExecutor {
  public:
    explicit PlanExecutor(RoutePlan plan);

    JointAction next(const WorldState& state);

  private:
    RoutePlan plan_;
    std::vector<size_t> pending_;  // per robot: index of the next path waypoint
};

struct ExpertConfig {
    int max_moves{50000};   // local-search iteration budget per plan
    int max_millis{2000};   // wall-clock cap per plan (safety net)
    uint64_t seed{0};
};

// Open-loop team-orienteering planner: BFS hop-distance matrix over interest
// waypoints and robot starts, cheapest-insertion construction, then
// simulated-annealing local search (relocate, swap, 2-opt, or-opt,
// insert/remove) maximizing covered interest within the step budget. Plans on
// the full underlying map regardless of exploration progress.
RoutePlan vrp_expert(const WorldState& state, int horizon, const ExpertConfig& config);

// Replan with vrp_expert over horizon min(plan_horizon, remaining) on the
// currently visible graph and execute only the first step.
JointAction receding_horizon(const WorldState& state, int plan_horizon,
                             const ExpertConfig& config);

// Per robot: BFS at most max_hops over the visible graph, head for the
// nearest interest waypoint (ties: smallest waypoint id, then smallest
// next-step id); stay when nothing is in range. Robots plan independently.
JointAction greedy_controller(const WorldState& state, int max_hops);

struct OracleResult {
    int best_reward{0};
    std::vector<JointAction> actions;
};

// Exhaustive search over joint action sequences with exact step semantics.
// Requires (max degree + 1)^(n_robots * horizon) <= 1e7.
OracleResult brute_force_oracle(const WorldState& state, int horizon);

Controller make_greedy_controller(int max_hops);
Controller make_receding_horizon_controller(int plan_horizon, ExpertConfig config);
// Plans once on the first call, then replays the open-loop plan.
Controller make_open_loop_expert_controller(ExpertConfig config);

}  // namespace covgnn
