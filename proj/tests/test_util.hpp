#pragma once

#include <memory>

#include "covgnn/map_gen.hpp"
#include "covgnn/world.hpp"

namespace covgnn::testutil {

// 0 - 1 - ... - (n-1), spacing 5.
inline SpatialGraph path_graph(int n) {
    SpatialGraph g;
    g.spacing = 5.0;
    for (int i = 0; i < n; ++i) {
        g.positions.push_back({5.0 * i, 0.0});
        g.adjacency.emplace_back();
        if (i > 0) {
            g.adjacency[i].push_back(i - 1);
            g.adjacency[i - 1].push_back(i);
        }
    }
    return g;
}

// 4-cycle on the corners of a 5m square.
inline SpatialGraph cycle4() {
    SpatialGraph g;
    g.spacing = 5.0;
    g.positions = {{0, 0}, {5, 0}, {5, 5}, {0, 5}};
    g.adjacency = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};
    return g;
}

inline SpatialGraph grid(double width, double height, double spacing = 5.0) {
    ObstacleMap map;
    map.bounds = {{0, 0}, {width, height}};
    return build_lattice(map, spacing);
}

inline std::shared_ptr<const SpatialGraph> shared(SpatialGraph g) {
    return std::make_shared<const SpatialGraph>(std::move(g));
}

// Fully explicit state for hand-constructed scenarios.
inline WorldState make_state(std::shared_ptr<const SpatialGraph> graph,
                             std::vector<int> robots, std::vector<int> interest_ids,
                             int horizon, Mode mode = Mode::coverage,
                             double sensor_range = 0.0) {
    WorldState s;
    s.graph = std::move(graph);
    s.robot_at = std::move(robots);
    s.interest.assign(s.graph->size(), 0);
    for (int w : interest_ids) s.interest[w] = 1;
    s.horizon = horizon;
    s.mode = mode;
    s.sensor_range = sensor_range;
    if (mode == Mode::exploration) {
        s.explored.assign(s.graph->size(), 0);
        for (int q : s.robot_at) s.explored[q] = 1;
        for (int w = 0; w < s.graph->size(); ++w) {
            for (int q : s.robot_at)
                if (dist(s.graph->positions[w], s.graph->positions[q]) <= sensor_range)
                    s.explored[w] = 1;
        }
    } else {
        s.explored.assign(s.graph->size(), 1);
    }
    return s;
}

// Small random mission map for property tests.
inline SpatialGraph random_map(Rng& rng, int target_nodes = 30) {
    MapGenParams params;
    params.width = 60;
    params.height = 60;
    params.min_rects = 1;
    params.max_rects = 3;
    params.min_rect_size = 5;
    params.max_rect_size = 18;
    params.min_discs = 0;
    params.max_discs = 1;
    params.submap_mean = target_nodes;
    return generate_map(params, rng);
}

}  // namespace covgnn::testutil
