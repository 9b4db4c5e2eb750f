#include "covgnn/graph_signal.hpp"

namespace covgnn {

GraphSignal observe(const WorldState& state) {
    const auto& graph = *state.graph;
    const bool explore = state.mode == Mode::exploration;

    GraphSignal signal;
    signal.spacing = graph.spacing;
    signal.node_dim = explore ? 4 : 3;

    std::vector<int> node_of(graph.size(), -1);
    for (int w = 0; w < graph.size(); ++w) {
        if (!state.explored[w]) continue;
        node_of[w] = static_cast<int>(signal.waypoint_ids.size());
        signal.waypoint_ids.push_back(w);
    }
    const int n_waypoint_nodes = static_cast<int>(signal.waypoint_ids.size());
    const int n_robots = state.num_robots();
    signal.n_nodes = n_waypoint_nodes + n_robots;
    for (int i = 0; i < n_robots; ++i) signal.robot_node_ids.push_back(n_waypoint_nodes + i);

    signal.node_features.assign(static_cast<size_t>(signal.n_nodes) * signal.node_dim, 0.0);
    for (int idx = 0; idx < n_waypoint_nodes; ++idx) {
        const int w = signal.waypoint_ids[idx];
        double* f = &signal.node_features[static_cast<size_t>(idx) * signal.node_dim];
        f[1] = 1.0;
        f[2] = state.interest[w] ? 1.0 : 0.0;
        if (explore) {
            for (int k : graph.adjacency[w]) {
                if (!state.explored[k]) {
                    f[3] = 1.0;
                    break;
                }
            }
        }
    }
    for (int i = 0; i < n_robots; ++i)
        signal.node_features[static_cast<size_t>(signal.robot_node_ids[i]) * signal.node_dim] = 1.0;

    auto add_edge = [&](int sender, int receiver, double length) {
        signal.senders.push_back(sender);
        signal.receivers.push_back(receiver);
        signal.edge_features.push_back(length);
        return static_cast<int>(signal.senders.size()) - 1;
    };

    // Map edges between visible waypoints; both directions fall out of the
    // symmetric adjacency scan.
    for (int idx = 0; idx < n_waypoint_nodes; ++idx) {
        const int w = signal.waypoint_ids[idx];
        for (int k : graph.adjacency[w]) {
            if (node_of[k] < 0) continue;
            add_edge(idx, node_of[k], dist(graph.positions[w], graph.positions[k]));
        }
    }

    // Action edges: a robot connects to the neighbors of its current
    // waypoint. The candidate->robot direction carries the move logit.
    for (int i = 0; i < n_robots; ++i) {
        const int q = state.robot_at[i];
        signal.action_edge_ids.push_back({kNoEdge, kNoEdge, kNoEdge, kNoEdge});
        signal.action_targets.push_back({kNoEdge, kNoEdge, kNoEdge, kNoEdge});
        int slot = 0;
        for (int k : graph.adjacency[q]) {
            if (node_of[k] < 0) continue;
            const double length = dist(graph.positions[q], graph.positions[k]);
            const int edge_id = add_edge(node_of[k], signal.robot_node_ids[i], length);
            add_edge(signal.robot_node_ids[i], node_of[k], length);
            if (slot < 4) {
                signal.action_edge_ids[i][slot] = edge_id;
                signal.action_targets[i][slot] = k;
                ++slot;
            }
        }
    }
    return signal;
}

bool operator==(const GraphSignal& a, const GraphSignal& b) {
    return a.n_nodes == b.n_nodes && a.node_dim == b.node_dim &&
           a.node_features == b.node_features && a.senders == b.senders &&
           a.receivers == b.receivers && a.edge_features == b.edge_features &&
           a.spacing == b.spacing && a.waypoint_ids == b.waypoint_ids &&
           a.robot_node_ids == b.robot_node_ids && a.action_edge_ids == b.action_edge_ids &&
           a.action_targets == b.action_targets;
}

}  // namespace covgnn
