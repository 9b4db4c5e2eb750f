#pragma once

#include <memory>
#include <string>
#include <vector>

#include "covgnn/spatial_graph.hpp"

namespace covgnn {

// Random mission maps: a bounded lattice with random rectangle/disc
// obstacles, restricted to its largest component, then a BFS-ball submap of
// roughly submap_mean waypoints (+/- submap_spread).
struct MapGenParams {
    double width{100};
    double height{100};
    double spacing{5};
    int min_rects{2};
    int max_rects{5};
    double min_rect_size{5};
    double max_rect_size{25};
    int min_discs{0};
    int max_discs{2};
    double min_disc_radius{2};
    double max_disc_radius{8};
    int submap_mean{60};        // 0 keeps the whole component
    double submap_spread{0.25};
    int min_diameter{0};        // resample until the map is at least this deep
};

SpatialGraph generate_map(const MapGenParams& params, Rng& rng);

// Maps for an episode stream: either freshly generated per episode or cycled
// from a fixed list of map files.
class MapSource {
  public:
    explicit MapSource(MapGenParams params);
    explicit MapSource(std::vector<std::string> map_paths);

    std::shared_ptr<const SpatialGraph> sample(int episode, uint64_t seed) const;

    bool generated() const { return paths_.empty(); }
    const MapGenParams& params() const { return params_; }
    const std::vector<std::string>& paths() const { return paths_; }

  private:
    MapGenParams params_;
    std::vector<std::string> paths_;
    std::vector<std::shared_ptr<const SpatialGraph>> cache_;
};

}  // namespace covgnn
