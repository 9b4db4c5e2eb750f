#include "covgnn/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covgnn {

int WorldState::interest_count() const {
    int count = 0;
    for (char f : interest) count += f != 0;
    return count;
}

bool WorldState::waypoint_occupied(int waypoint) const {
    return std::find(robot_at.begin(), robot_at.end(), waypoint) != robot_at.end();
}

namespace {

void reveal_in_range(WorldState& state) {
    const auto& graph = *state.graph;
    for (int w = 0; w < graph.size(); ++w) {
        if (state.explored[w]) continue;
        for (int q : state.robot_at) {
            if (dist(graph.positions[w], graph.positions[q]) <= state.sensor_range) {
                state.explored[w] = 1;
                break;
            }
        }
    }
}

}  // namespace

WorldState reset(std::shared_ptr<const SpatialGraph> graph, int n_robots,
                 double interest_fraction, Mode mode, double sensor_range,
                 int horizon, Rng& rng) {
    if (!graph || graph->size() == 0) throw std::invalid_argument("reset: empty graph");
    const int n = graph->size();
    if (n_robots < 1 || n_robots > n)
        throw std::invalid_argument("reset: robot count exceeds waypoint count");
    if (interest_fraction <= 0 || interest_fraction > 1)
        throw std::invalid_argument("reset: interest_fraction must be in (0, 1]");
    if (horizon < 0) throw std::invalid_argument("reset: negative horizon");

    WorldState state;
    state.graph = std::move(graph);
    state.mode = mode;
    state.sensor_range = sensor_range;
    state.horizon = horizon;
    state.robot_at = rng.sample_without_replacement(n, n_robots);

    std::vector<char> is_start(n, 0);
    for (int q : state.robot_at) is_start[q] = 1;
    std::vector<int> candidates;
    for (int w = 0; w < n; ++w)
        if (!is_start[w]) candidates.push_back(w);

    const int want = static_cast<int>(std::llround(interest_fraction * n));
    const int k = std::min<int>(want, static_cast<int>(candidates.size()));
    state.interest.assign(n, 0);
    for (int idx : rng.sample_without_replacement(static_cast<int>(candidates.size()), k))
        state.interest[candidates[idx]] = 1;

    if (mode == Mode::exploration) {
        state.explored.assign(n, 0);
        for (int q : state.robot_at) state.explored[q] = 1;
        reveal_in_range(state);
    } else {
        state.explored.assign(n, 1);
    }
    return state;
}

int step(WorldState& state, const JointAction& action) {
    const int n_robots = state.num_robots();
    if (static_cast<int>(action.target.size()) != n_robots)
        throw std::invalid_argument("step: action size mismatch");
    if (state.timestep >= state.horizon) throw std::runtime_error("step: horizon exhausted");

    const auto& graph = *state.graph;
    std::vector<int> new_at(state.robot_at);
    for (int i = 0; i < n_robots; ++i) {
        const int target = action.target[i];
        if (target == kStay) continue;
        const auto& nbrs = graph.adjacency[state.robot_at[i]];
        if (!std::binary_search(nbrs.begin(), nbrs.end(), target))
            throw std::invalid_argument("step: move target not adjacent to robot waypoint");

        bool blocked = false;
        for (int j = 0; j < i && !blocked; ++j) blocked = new_at[j] == target;
        for (int j = i + 1; j < n_robots && !blocked; ++j) blocked = state.robot_at[j] == target;
        if (!blocked) new_at[i] = target;
    }
    state.robot_at = std::move(new_at);

    int reward = 0;
    for (int q : state.robot_at) {
        if (state.interest[q]) {
            state.interest[q] = 0;
            ++reward;
        }
    }

    if (state.mode == Mode::exploration) reveal_in_range(state);
    ++state.timestep;
    return reward;
}

RolloutResult rollout(WorldState& state, const Controller& controller, int steps) {
    RolloutResult result;
    for (int t = 0; t < steps && state.timestep < state.horizon; ++t) {
        JointAction action = controller(state);
        const int reward = step(state, action);
        result.total_reward += reward;
        result.trajectory.actions.push_back(std::move(action));
        result.trajectory.rewards.push_back(reward);
        result.trajectory.positions.push_back(state.robot_at);
    }
    return result;
}

}  // namespace covgnn
