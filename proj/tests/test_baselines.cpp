#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "covgnn/baselines.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace covgnn;
using testutil::make_state;
using testutil::shared;

namespace {

// Execute a plan open-loop through the environment and sum the reward.
int realized_reward(WorldState state, const RoutePlan& plan) {
    PlanExecutor executor(plan);
    int total = 0;
    for (int t = 0; t < plan.horizon && state.timestep < state.horizon; ++t)
        total += step(state, executor.next(state));
    return total;
}

// Tiny random instance for oracle comparisons: <= 8 waypoints, <= 2 robots.
WorldState tiny_instance(Rng& rng, int horizon) {
    const int n = 5 + rng.index(4);  // 5..8 waypoints
    SpatialGraph g;
    for (int attempt = 0;; ++attempt) {
        Rng map_rng(rng.next_u64());
        g = testutil::random_map(map_rng, n);
        if (g.size() >= 3) break;
    }
    const int n_robots = 1 + rng.index(2);
    Rng reset_rng(rng.next_u64());
    return reset(shared(std::move(g)), n_robots, 1.0, Mode::coverage, 0, horizon, reset_rng);
}

}  // namespace

TEST_CASE("oracle: single robot with one interest neighbor, T=1") {
    auto s = make_state(shared(testutil::path_graph(2)), {0}, {1}, 1);
    const OracleResult r = brute_force_oracle(s, 1);
    CHECK(r.best_reward == 1);
    CHECK(r.actions.size() == 1);
    CHECK(r.actions[0].target[0] == 1);
}

TEST_CASE("oracle: 4-cycle with all other nodes interest, T=3") {
    auto s = make_state(shared(testutil::cycle4()), {0}, {1, 2, 3}, 3);
    CHECK(brute_force_oracle(s, 3).best_reward == 3);
}

TEST_CASE("oracle: empty interest pays zero") {
    auto s = make_state(shared(testutil::cycle4()), {0}, {}, 3);
    CHECK(brute_force_oracle(s, 3).best_reward == 0);
}

TEST_CASE("oracle: search-space bound is enforced") {
    auto s = make_state(shared(testutil::grid(20, 20)), {0, 3, 7}, {1}, 12);
    CHECK_THROWS_AS(brute_force_oracle(s, 12), std::invalid_argument);
}

TEST_CASE("vrp_expert: single robot sweeps a 4-node path in 3 steps") {
    auto s = make_state(shared(testutil::path_graph(4)), {0}, {1, 2, 3}, 3);
    ExpertConfig cfg;
    cfg.seed = 1;
    const RoutePlan plan = vrp_expert(s, 3, cfg);
    CHECK(realized_reward(s, plan) == 3);
}

TEST_CASE("vrp_expert: two robots split a 6-node path, T=2 -> reward 4") {
    auto s = make_state(shared(testutil::path_graph(6)), {0, 5}, {1, 2, 3, 4}, 2);
    ExpertConfig cfg;
    cfg.seed = 2;
    const RoutePlan plan = vrp_expert(s, 2, cfg);
    CHECK(realized_reward(s, plan) == 4);
}

TEST_CASE("vrp_expert: no interest -> stay-in-place routes") {
    auto s = make_state(shared(testutil::path_graph(4)), {1}, {}, 5);
    ExpertConfig cfg;
    const RoutePlan plan = vrp_expert(s, 5, cfg);
    CHECK(plan.paths[0] == std::vector<int>{1});
    CHECK(realized_reward(s, plan) == 0);
}

TEST_CASE("vrp_expert: deterministic for a fixed seed") {
    Rng rng(3);
    const auto g = shared(testutil::random_map(rng, 30));
    Rng reset_rng(4);
    const WorldState s = reset(g, 2, 1.0, Mode::coverage, 0, 15, reset_rng);
    ExpertConfig cfg;
    cfg.seed = 77;
    const RoutePlan a = vrp_expert(s, 15, cfg);
    const RoutePlan b = vrp_expert(s, 15, cfg);
    CHECK(a.paths == b.paths);
}

TEST_CASE("vrp_expert: never beats the oracle; matches it on >= 95% of 50 tiny instances") {
    Rng rng(2024);
    int matched = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        const int horizon = 2 + rng.index(4);  // T in 2..5
        WorldState s = tiny_instance(rng, horizon);
        const OracleResult oracle = brute_force_oracle(s, horizon);
        ExpertConfig cfg;
        cfg.seed = 1000 + trial;
        cfg.max_moves = 20000;
        const RoutePlan plan = vrp_expert(s, horizon, cfg);
        const int expert = realized_reward(s, plan);
        CHECK(expert <= oracle.best_reward);
        matched += expert == oracle.best_reward;
    }
    CHECK(matched >= 48);  // 95% of 50, rounded up
}

TEST_CASE("greedy: heads for the nearest interest within the hop bound") {
    // A-B-C-D path, ids 0..3, robot at A, interest only at D.
    auto s = make_state(shared(testutil::path_graph(4)), {0}, {3}, 5);
    CHECK(greedy_controller(s, 3).target[0] == 1);
    CHECK(greedy_controller(s, kUnboundedHops).target[0] == 1);
    CHECK(greedy_controller(s, 2).target[0] == kStay);  // target invisible
}

TEST_CASE("greedy: equidistant targets resolve toward the smaller waypoint id") {
    auto s = make_state(shared(testutil::path_graph(5)), {2}, {0, 4}, 5);
    CHECK(greedy_controller(s, kUnboundedHops).target[0] == 1);  // toward waypoint 0
}

TEST_CASE("greedy: exploration mode only sees explored waypoints") {
    const auto g = shared(testutil::path_graph(5));
    auto s = make_state(g, {0}, {4}, 10, Mode::exploration, 5.0);
    // Only waypoints 0,1 explored; interest at 4 is invisible.
    CHECK(greedy_controller(s, kUnboundedHops).target[0] == kStay);
    step(s, {{1}});
    step(s, {{2}});
    step(s, {{3}});
    // Now 4 is explored and carries interest.
    CHECK(greedy_controller(s, kUnboundedHops).target[0] == 4);
}

TEST_CASE("greedy never beats the oracle on tiny instances") {
    Rng rng(555);
    for (int trial = 0; trial < 20; ++trial) {
        const int horizon = 2 + rng.index(3);
        WorldState s = tiny_instance(rng, horizon);
        const int optimal = brute_force_oracle(s, horizon).best_reward;
        WorldState run = s;
        const int greedy =
            rollout(run, make_greedy_controller(kUnboundedHops), horizon).total_reward;
        CHECK(greedy <= optimal);
    }
}

TEST_CASE("greedy with K >= diameter equals greedy with the full distance matrix") {
    Rng rng(777);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = shared(testutil::random_map(rng, 25));
        const int diameter = graph_diameter(*g);
        Rng reset_rng(trial);
        WorldState a = reset(g, 2, 1.0, Mode::coverage, 0, 15, reset_rng);
        WorldState b = a;
        for (int t = 0; t < 15; ++t) {
            const JointAction bounded = greedy_controller(a, diameter);
            const JointAction full = greedy_controller(b, kUnboundedHops);
            CHECK(bounded.target == full.target);
            step(a, bounded);
            step(b, full);
        }
    }
}

TEST_CASE("receding horizon: one-step lookahead grabs the adjacent interest") {
    auto s = make_state(shared(testutil::path_graph(3)), {1}, {2}, 5);
    ExpertConfig cfg;
    cfg.seed = 5;
    const JointAction a = receding_horizon(s, 1, cfg);
    CHECK(a.target[0] == 2);
}

TEST_CASE("receding horizon: deterministic per state and seed") {
    Rng rng(31);
    const auto g = shared(testutil::random_map(rng, 25));
    Rng reset_rng(8);
    const WorldState s = reset(g, 2, 1.0, Mode::coverage, 0, 20, reset_rng);
    ExpertConfig cfg;
    cfg.seed = 99;
    CHECK(receding_horizon(s, 6, cfg).target == receding_horizon(s, 6, cfg).target);
}

TEST_CASE("receding horizon with full remaining budget matches the open-loop first move") {
    Rng rng(61);
    for (int trial = 0; trial < 8; ++trial) {
        const int horizon = 2 + rng.index(3);
        const WorldState s = tiny_instance(rng, horizon);
        ExpertConfig cfg;
        cfg.seed = Rng::derive(42, trial);
        // Replanning over the identical remaining horizon runs the same
        // planner on the same inputs; match the per-step seed derivation so
        // the routes (and hence the first move) coincide.
        ExpertConfig open_cfg = cfg;
        open_cfg.seed = Rng::derive(cfg.seed, static_cast<uint64_t>(s.timestep));
        const RoutePlan open_loop = vrp_expert(s, horizon, open_cfg);
        const JointAction first = receding_horizon(s, horizon, cfg);
        CHECK(first.target == open_loop.action_at(0).target);
    }
}

TEST_CASE("all controllers emit only legal actions") {
    Rng rng(91);
    for (int trial = 0; trial < 6; ++trial) {
        const auto g = shared(testutil::random_map(rng, 20));
        Rng reset_rng(trial * 3 + 1);
        WorldState s = reset(g, 3, 0.9, Mode::coverage, 0, 10, reset_rng);
        ExpertConfig cfg;
        cfg.seed = trial;
        cfg.max_moves = 4000;
        const std::vector<Controller> controllers = {
            make_greedy_controller(4),
            make_receding_horizon_controller(5, cfg),
            make_open_loop_expert_controller(cfg),
        };
        for (const auto& controller : controllers) {
            WorldState run = s;
            // step() itself validates adjacency; rollout would throw on an
            // illegal action.
            CHECK_NOTHROW(rollout(run, controller, 10));
        }
    }
}
