#include "covgnn/map_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace covgnn {

SpatialGraph generate_map(const MapGenParams& params, Rng& rng) {
    constexpr int kMaxAttempts = 200;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        ObstacleMap map;
        map.bounds = {{0, 0}, {params.width, params.height}};
        const int n_rects =
            params.min_rects + static_cast<int>(rng.below(params.max_rects - params.min_rects + 1));
        for (int i = 0; i < n_rects; ++i) {
            const double w = rng.uniform(params.min_rect_size, params.max_rect_size);
            const double h = rng.uniform(params.min_rect_size, params.max_rect_size);
            const double x = rng.uniform(0, std::max(1e-9, params.width - w));
            const double y = rng.uniform(0, std::max(1e-9, params.height - h));
            map.rects.push_back({{x, y}, {x + w, y + h}});
        }
        const int n_discs =
            params.min_discs + static_cast<int>(rng.below(params.max_discs - params.min_discs + 1));
        for (int i = 0; i < n_discs; ++i) {
            const double r = rng.uniform(params.min_disc_radius, params.max_disc_radius);
            const double x = rng.uniform(r, std::max(r + 1e-9, params.width - r));
            const double y = rng.uniform(r, std::max(r + 1e-9, params.height - r));
            map.discs.push_back({{x, y}, r});
        }

        SpatialGraph graph;
        try {
            graph = build_lattice(map, params.spacing);
        } catch (const std::runtime_error&) {
            continue;  // everything landed inside an obstacle; try again
        }

        if (params.submap_mean > 0 && params.submap_mean < graph.size()) {
            const double lo = (1.0 - params.submap_spread) * params.submap_mean;
            const double hi = (1.0 + params.submap_spread) * params.submap_mean;
            const int target = std::clamp(
                static_cast<int>(std::llround(rng.uniform(lo, hi))), 1, graph.size());
            graph = sample_submap(graph, target, rng);
        }
        if (params.min_diameter > 0 && graph_diameter(graph) < params.min_diameter) continue;
        if (params.submap_mean > 0 &&
            graph.size() < (1.0 - params.submap_spread) * params.submap_mean)
            continue;  // component smaller than the requested size band
        return graph;
    }
    throw std::runtime_error("generate_map: no feasible map after 200 attempts");
}

MapSource::MapSource(MapGenParams params) : params_(params) {}

MapSource::MapSource(std::vector<std::string> map_paths) : paths_(std::move(map_paths)) {
    if (paths_.empty()) throw std::invalid_argument("MapSource: empty map list");
    // Loaded eagerly so sampling is safe from concurrent episode workers.
    cache_.reserve(paths_.size());
    for (const auto& path : paths_)
        cache_.push_back(std::make_shared<const SpatialGraph>(load_map(path)));
}

std::shared_ptr<const SpatialGraph> MapSource::sample(int episode, uint64_t seed) const {
    if (!paths_.empty()) return cache_[static_cast<size_t>(episode) % paths_.size()];
    Rng rng(Rng::derive(seed, static_cast<uint64_t>(episode)));
    return std::make_shared<const SpatialGraph>(generate_map(params_, rng));
}

}  // namespace covgnn
