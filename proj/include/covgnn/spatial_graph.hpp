#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "covgnn/geometry.hpp"
#include "covgnn/rng.hpp"

namespace covgnn {

// Immutable 4-connected lattice of waypoints. Safe to share across threads
// once built.
struct SpatialGraph {
    std::vector<Vec2> positions;             // waypoint id -> location in meters
    std::vector<std::vector<int>> adjacency;  // waypoint id -> sorted neighbor ids
    double spacing{0};                        // meters between adjacent waypoints

    int size() const { return static_cast<int>(positions.size()); }
    int num_edges() const;  // undirected edge count

    // Throws std::runtime_error on any structural invariant violation:
    // symmetry, self-loops, degree > 4, edge length != spacing, disconnected.
    void validate() const;
};

inline constexpr int kUnboundedHops = std::numeric_limits<int>::max();

// Grid points with the given spacing over the map bounds, minus points inside
// obstacles; 4-neighbor edges kept only when the connecting segment stays
// clear of obstacles; restricted to the largest connected component.
// Throws std::runtime_error("empty map") when no waypoint survives.
SpatialGraph build_lattice(const ObstacleMap& map, double spacing = 5.0);

// Connected induced subgraph of target_size waypoints, grown breadth-first
// from a uniformly random seed waypoint. Ids are re-indexed densely from 0.
SpatialGraph sample_submap(const SpatialGraph& graph, int target_size, Rng& rng);

// BFS hop counts from source; waypoints farther than max_hops are absent.
std::unordered_map<int, int> k_hop_distances(const SpatialGraph& graph, int source,
                                             int max_hops = kUnboundedHops);

int graph_diameter(const SpatialGraph& graph);

// Plain-text map file: {"spacing": s, "positions": [[x,y],...],
// "edges": [[i,j],...]} with i < j. The loader re-validates all invariants.
void save_map(const SpatialGraph& graph, const std::string& path);
SpatialGraph load_map(const std::string& path);

// BFS over an optional node filter; used by controllers that only see part of
// the map. dist[j] == -1 means unreachable/absent. visible == nullptr means
// all waypoints visible.
std::vector<int> bfs_hops(const SpatialGraph& graph, int source, int max_hops,
                          const std::vector<char>* visible = nullptr);

}  // namespace covgnn
