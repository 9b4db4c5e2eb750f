#pragma once

#include <array>
#include <vector>

#include "covgnn/world.hpp"

namespace covgnn {

inline constexpr int kNoEdge = -1;

// Heterogeneous computation graph fed to the GNN. Nodes are the visible
// waypoints followed by one node per robot; every undirected relation appears
// as two directed edges. Edge features are raw distances in meters; spacing
// is carried along so consumers can normalize.
struct GraphSignal {
    int n_nodes{0};
    int node_dim{0};                     // 3 in coverage, 4 in exploration
    std::vector<double> node_features;   // n_nodes x node_dim, row-major, {0,1}
    std::vector<int> senders;
    std::vector<int> receivers;
    std::vector<double> edge_features;   // one distance per directed edge
    double spacing{0};

    std::vector<int> waypoint_ids;       // waypoint-node index -> waypoint id
    std::vector<int> robot_node_ids;     // robot index -> node index

    // Per robot: the candidate-move slots, in ascending target-waypoint-id
    // order. Slot k holds the id of the directed edge (candidate waypoint ->
    // robot node) whose logit scores that move, kNoEdge past the last
    // candidate. action_targets mirrors this with the waypoint ids.
    std::vector<std::array<int, 4>> action_edge_ids;
    std::vector<std::array<int, 4>> action_targets;

    int num_edges() const { return static_cast<int>(senders.size()); }
    int num_robots() const { return static_cast<int>(robot_node_ids.size()); }
    bool action_valid(int robot, int slot) const {
        return action_edge_ids[robot][slot] != kNoEdge;
    }
    int num_actions(int robot) const {
        int count = 0;
        while (count < 4 && action_valid(robot, count)) ++count;
        return count;
    }
};

// Pure function of the state. Coverage mode shows the whole map; exploration
// mode shows only explored waypoints, marks frontier waypoints (explored with
// at least one unexplored neighbor), and drops edges into hidden territory.
GraphSignal observe(const WorldState& state);

bool operator==(const GraphSignal& a, const GraphSignal& b);

}  // namespace covgnn
