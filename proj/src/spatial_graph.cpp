#include "covgnn/spatial_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace covgnn {

int SpatialGraph::num_edges() const {
    size_t total = 0;
    for (const auto& nbrs : adjacency) total += nbrs.size();
    return static_cast<int>(total / 2);
}

void SpatialGraph::validate() const {
    const int n = size();
    if (static_cast<int>(adjacency.size()) != n)
        throw std::runtime_error("SpatialGraph: adjacency/positions size mismatch");
    if (spacing <= 0) throw std::runtime_error("SpatialGraph: non-positive spacing");
    for (int j = 0; j < n; ++j) {
        const auto& nbrs = adjacency[j];
        if (nbrs.size() > 4) throw std::runtime_error("SpatialGraph: degree exceeds 4");
        if (!std::is_sorted(nbrs.begin(), nbrs.end()))
            throw std::runtime_error("SpatialGraph: adjacency list not sorted");
        if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end())
            throw std::runtime_error("SpatialGraph: duplicate edge");
        for (int k : nbrs) {
            if (k < 0 || k >= n) throw std::runtime_error("SpatialGraph: neighbor id out of range");
            if (k == j) throw std::runtime_error("SpatialGraph: self-loop");
            if (!std::binary_search(adjacency[k].begin(), adjacency[k].end(), j))
                throw std::runtime_error("SpatialGraph: asymmetric adjacency");
            const double d = dist(positions[j], positions[k]);
            if (std::abs(d - spacing) > 1e-9 * spacing)
                throw std::runtime_error("SpatialGraph: edge length differs from spacing");
        }
    }
    if (n > 0) {
        const auto hops = bfs_hops(*this, 0, kUnboundedHops);
        for (int j = 0; j < n; ++j)
            if (hops[j] < 0) throw std::runtime_error("SpatialGraph: disconnected");
    }
}

std::vector<int> bfs_hops(const SpatialGraph& graph, int source, int max_hops,
                          const std::vector<char>* visible) {
    std::vector<int> hops(graph.size(), -1);
    if (source < 0 || source >= graph.size())
        throw std::invalid_argument("bfs_hops: source out of range");
    if (visible && !(*visible)[source]) return hops;
    std::deque<int> queue{source};
    hops[source] = 0;
    while (!queue.empty()) {
        const int j = queue.front();
        queue.pop_front();
        if (hops[j] >= max_hops) continue;
        for (int k : graph.adjacency[j]) {
            if (hops[k] >= 0) continue;
            if (visible && !(*visible)[k]) continue;
            hops[k] = hops[j] + 1;
            queue.push_back(k);
        }
    }
    return hops;
}

SpatialGraph build_lattice(const ObstacleMap& map, double spacing) {
    if (spacing <= 0) throw std::invalid_argument("build_lattice: spacing must be positive");
    map.validate();

    const double w = map.bounds.hi.x - map.bounds.lo.x;
    const double h = map.bounds.hi.y - map.bounds.lo.y;
    const int nx = static_cast<int>(std::floor(w / spacing + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor(h / spacing + 1e-9)) + 1;

    // Free grid points, indexed by (ix, iy).
    std::vector<int> id_of(static_cast<size_t>(nx) * ny, -1);
    std::vector<Vec2> positions;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p{map.bounds.lo.x + ix * spacing, map.bounds.lo.y + iy * spacing};
            if (map.point_blocked(p)) continue;
            id_of[static_cast<size_t>(iy) * nx + ix] = static_cast<int>(positions.size());
            positions.push_back(p);
        }
    }
    if (positions.empty()) throw std::runtime_error("build_lattice: empty map");

    std::vector<std::vector<int>> adjacency(positions.size());
    auto try_edge = [&](int a, int b) {
        if (map.segment_blocked(positions[a], positions[b])) return;
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    };
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const int a = id_of[static_cast<size_t>(iy) * nx + ix];
            if (a < 0) continue;
            if (ix + 1 < nx) {
                const int b = id_of[static_cast<size_t>(iy) * nx + ix + 1];
                if (b >= 0) try_edge(a, b);
            }
            if (iy + 1 < ny) {
                const int b = id_of[(static_cast<size_t>(iy) + 1) * nx + ix];
                if (b >= 0) try_edge(a, b);
            }
        }
    }

    SpatialGraph graph{std::move(positions), std::move(adjacency), spacing};
    for (auto& nbrs : graph.adjacency) std::sort(nbrs.begin(), nbrs.end());

    // Restrict to the largest connected component.
    const int n = graph.size();
    std::vector<int> component(n, -1);
    int best_comp = -1, best_size = 0;
    for (int start = 0, comp = 0; start < n; ++start) {
        if (component[start] >= 0) continue;
        int count = 0;
        std::deque<int> queue{start};
        component[start] = comp;
        while (!queue.empty()) {
            const int j = queue.front();
            queue.pop_front();
            ++count;
            for (int k : graph.adjacency[j]) {
                if (component[k] < 0) {
                    component[k] = comp;
                    queue.push_back(k);
                }
            }
        }
        if (count > best_size) {
            best_size = count;
            best_comp = comp;
        }
        ++comp;
    }
    if (best_size == n) return graph;

    std::vector<int> new_id(n, -1);
    SpatialGraph out;
    out.spacing = graph.spacing;
    for (int j = 0; j < n; ++j) {
        if (component[j] != best_comp) continue;
        new_id[j] = static_cast<int>(out.positions.size());
        out.positions.push_back(graph.positions[j]);
    }
    out.adjacency.resize(out.positions.size());
    for (int j = 0; j < n; ++j) {
        if (new_id[j] < 0) continue;
        for (int k : graph.adjacency[j])
            if (new_id[k] >= 0) out.adjacency[new_id[j]].push_back(new_id[k]);
    }
    return out;
}

SpatialGraph sample_submap(const SpatialGraph& graph, int target_size, Rng& rng) {
    if (target_size < 1 || target_size > graph.size())
        throw std::invalid_argument("sample_submap: target_size out of range");

    const int seed = rng.index(graph.size());
    std::vector<char> picked(graph.size(), 0);
    std::vector<int> order;
    std::deque<int> queue{seed};
    picked[seed] = 1;
    while (!queue.empty() && static_cast<int>(order.size()) < target_size) {
        const int j = queue.front();
        queue.pop_front();
        order.push_back(j);
        for (int k : graph.adjacency[j]) {
            if (!picked[k]) {
                picked[k] = 1;
                queue.push_back(k);
            }
        }
    }

    std::sort(order.begin(), order.end());
    std::vector<int> new_id(graph.size(), -1);
    for (size_t i = 0; i < order.size(); ++i) new_id[order[i]] = static_cast<int>(i);

    SpatialGraph out;
    out.spacing = graph.spacing;
    out.positions.reserve(order.size());
    out.adjacency.resize(order.size());
    for (int j : order) {
        out.positions.push_back(graph.positions[j]);
        auto& nbrs = out.adjacency[new_id[j]];
        for (int k : graph.adjacency[j])
            if (new_id[k] >= 0) nbrs.push_back(new_id[k]);
    }
    return out;
}

std::unordered_map<int, int> k_hop_distances(const SpatialGraph& graph, int source,
                                             int max_hops) {
    if (max_hops < 0) throw std::invalid_argument("k_hop_distances: negative hop bound");
    const auto hops = bfs_hops(graph, source, max_hops);
    std::unordered_map<int, int> out;
    for (int j = 0; j < graph.size(); ++j)
        if (hops[j] >= 0) out.emplace(j, hops[j]);
    return out;
}

int graph_diameter(const SpatialGraph& graph) {
    int diameter = 0;
    for (int s = 0; s < graph.size(); ++s) {
        const auto hops = bfs_hops(graph, s, kUnboundedHops);
        for (int j = 0; j < graph.size(); ++j) {
            if (hops[j] < 0) throw std::runtime_error("graph_diameter: disconnected graph");
            diameter = std::max(diameter, hops[j]);
        }
    }
    return diameter;
}

void save_map(const SpatialGraph& graph, const std::string& path) {
    nlohmann::json j;
    j["spacing"] = graph.spacing;
    auto& pos = j["positions"] = nlohmann::json::array();
    for (const auto& p : graph.positions) pos.push_back({p.x, p.y});
    auto& edges = j["edges"] = nlohmann::json::array();
    for (int a = 0; a < graph.size(); ++a)
        for (int b : graph.adjacency[a])
            if (a < b) edges.push_back({a, b});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_map: cannot open " + path);
    out << j.dump() << "\n";
}

SpatialGraph load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_map: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_map: parse error in " + path + ": " + e.what());
    }

    SpatialGraph graph;
    graph.spacing = j.at("spacing").get<double>();
    for (const auto& p : j.at("positions"))
        graph.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    graph.adjacency.resize(graph.positions.size());
    for (const auto& e : j.at("edges")) {
        const int a = e.at(0).get<int>();
        const int b = e.at(1).get<int>();
        if (a < 0 || b < 0 || a >= graph.size() || b >= graph.size())
            throw std::runtime_error("load_map: edge id out of range");
        if (a >= b) throw std::runtime_error("load_map: edges must satisfy i < j");
        graph.adjacency[a].push_back(b);
        graph.adjacency[b].push_back(a);
    }
    for (auto& nbrs : graph.adjacency) std::sort(nbrs.begin(), nbrs.end());
    try {
        graph.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error("load_map: invalid map " + path + ": " + e.what());
    }
    return graph;
}

}  // namespace covgnn
