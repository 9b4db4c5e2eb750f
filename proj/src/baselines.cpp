#include "covgnn/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace covgnn {

JointAction RoutePlan::action_at(int t) const {
    JointAction action;
    action.target.reserve(paths.size());
    for (const auto& path : paths) {
        if (t + 1 < static_cast<int>(path.size()) && path[t + 1] != path[t])
            action.target.push_back(path[t + 1]);
        else
            action.target.push_back(kStay);
    }
    return action;
}

PlanExecutor::PlanExecutor(RoutePlan plan) : plan_(std::move(plan)) {
    pending_.assign(plan_.paths.size(), 1);
}

JointAction PlanExecutor::next(const WorldState& state) {
    JointAction action;
    action.target.reserve(plan_.paths.size());
    for (size_t i = 0; i < plan_.paths.size(); ++i) {
        const auto& path = plan_.paths[i];
        size_t& p = pending_[i];
        while (p < path.size() && path[p] == state.robot_at[i]) ++p;
        if (p >= path.size()) {
            action.target.push_back(kStay);
            continue;
        }
        const auto& nbrs = state.graph->adjacency[state.robot_at[i]];
        if (std::binary_search(nbrs.begin(), nbrs.end(), path[p])) {
            action.target.push_back(path[p]);
        } else {
            action.target.push_back(kStay);  // deviated beyond one hop: hold
        }
    }
    return action;
}

void RoutePlan::validate(const WorldState& state) const {
    if (paths.size() != state.robot_at.size())
        throw std::runtime_error("RoutePlan: robot count mismatch");
    for (size_t i = 0; i < paths.size(); ++i) {
        const auto& path = paths[i];
        if (path.empty() || path.front() != state.robot_at[i])
            throw std::runtime_error("RoutePlan: path must start at the robot waypoint");
        if (static_cast<int>(path.size()) - 1 > horizon)
            throw std::runtime_error("RoutePlan: path longer than horizon");
        for (size_t t = 1; t < path.size(); ++t) {
            if (path[t] == path[t - 1]) continue;
            const auto& nbrs = state.graph->adjacency[path[t - 1]];
            if (!std::binary_search(nbrs.begin(), nbrs.end(), path[t]))
                throw std::runtime_error("RoutePlan: non-adjacent consecutive waypoints");
        }
    }
}

namespace {

// ---------------------------------------------------------------------------
// Team-orienteering planner over hop distances
// ---------------------------------------------------------------------------

struct PlannerInput {
    const SpatialGraph* graph;
    std::vector<int> starts;
    std::vector<int> targets;              // interest waypoints, visible only
    const std::vector<char>* visible;      // nullptr = whole map
    int horizon;
};

// Routes store indices into the planner's source table: entry s of `dist`
// holds BFS hops from source s to every waypoint.
struct DistanceTable {
    std::vector<int> sources;                 // starts then targets
    std::vector<std::vector<int>> dist;       // per source: waypoint -> hops or -1
    std::vector<int> source_of_waypoint;      // waypoint -> source index or -1

    int between(int source_idx, int waypoint) const { return dist[source_idx][waypoint]; }
};

DistanceTable build_distances(const PlannerInput& in) {
    DistanceTable table;
    table.sources = in.starts;
    table.sources.insert(table.sources.end(), in.targets.begin(), in.targets.end());
    table.source_of_waypoint.assign(in.graph->size(), -1);
    table.dist.reserve(table.sources.size());
    for (size_t s = 0; s < table.sources.size(); ++s) {
        table.source_of_waypoint[table.sources[s]] = static_cast<int>(s);
        table.dist.push_back(bfs_hops(*in.graph, table.sources[s], kUnboundedHops, in.visible));
    }
    return table;
}

struct Routes {
    // Per robot: sequence of target waypoint ids (start excluded).
    std::vector<std::vector<int>> seq;
    std::vector<int> cost;  // hops per robot
    int covered{0};
    int total_cost{0};

    bool better_than(const Routes& o) const {
        return covered > o.covered || (covered == o.covered && total_cost < o.total_cost);
    }
};

class RoutePlanner {
  public:
    RoutePlanner(const PlannerInput& in, const ExpertConfig& config)
        : in_(in), table_(build_distances(in)), config_(config), rng_(config.seed) {}

    // A few polished candidates: the deterministic construction plus the best
    // of each reheated annealing segment. The caller picks by simulating.
    std::vector<Routes> plan_candidates() {
        std::vector<Routes> candidates;
        Routes current = construct_greedy();
        polish(current);
        candidates.push_back(current);
        Routes best = current;
        const int segments = 3;
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::milliseconds(config_.max_millis);
        for (int s = 0; s < segments; ++s) {
            anneal(current, best, config_.max_moves / segments, deadline);
            polish(current);
            if (current.better_than(best)) best = current;
            Routes polished_best = best;
            polish(polished_best);
            if (polished_best.better_than(best)) best = polished_best;
            candidates.push_back(best);
            current = best;  // intensify from the incumbent, reheated
        }
        return candidates;
    }

    const DistanceTable& table() const { return table_; }

    // Recost every route; false when any leg is unreachable or over budget.
    bool try_recost_all(Routes& r) {
        r.total_cost = 0;
        for (size_t robot = 0; robot < r.seq.size(); ++robot) {
            const int fresh = route_cost(static_cast<int>(robot), r.seq[robot]);
            if (fresh < 0 || fresh > in_.horizon) return false;
            r.cost[robot] = fresh;
            r.total_cost += fresh;
        }
        return true;
    }

  private:
    int hops(int from_waypoint, int to_waypoint) const {
        return table_.between(table_.source_of_waypoint[from_waypoint], to_waypoint);
    }

    // Cost delta of inserting target at position pos (0 = right after start).
    // Returns a large sentinel when unreachable.
    long delta_insert(const Routes& r, int robot, int pos, int target) const {
        const int prev = pos == 0 ? in_.starts[robot] : r.seq[robot][pos - 1];
        const int d_in = hops(prev, target);
        if (d_in < 0) return kInfeasible;
        if (pos == static_cast<int>(r.seq[robot].size())) return d_in;
        const int next = r.seq[robot][pos];
        const int d_out = hops(target, next);
        if (d_out < 0) return kInfeasible;
        return static_cast<long>(d_in) + d_out - hops(prev, next);
    }

    int route_cost(int robot, const std::vector<int>& seq) const {
        int prev = in_.starts[robot];
        int total = 0;
        for (int t : seq) {
            const int d = hops(prev, t);
            if (d < 0) return -1;
            total += d;
            prev = t;
        }
        return total;
    }

    Routes construct_greedy() {
        Routes r;
        r.seq.resize(in_.starts.size());
        r.cost.assign(in_.starts.size(), 0);
        std::vector<char> routed(in_.graph->size(), 0);
        for (;;) {
            long best_delta = kInfeasible;
            int best_robot = -1, best_pos = -1, best_target = -1;
            for (int target : in_.targets) {
                if (routed[target]) continue;
                for (size_t robot = 0; robot < r.seq.size(); ++robot) {
                    for (int pos = 0; pos <= static_cast<int>(r.seq[robot].size()); ++pos) {
                        const long delta = delta_insert(r, static_cast<int>(robot), pos, target);
                        if (delta >= kInfeasible) continue;
                        if (r.cost[robot] + delta > in_.horizon) continue;
                        if (delta < best_delta) {
                            best_delta = delta;
                            best_robot = static_cast<int>(robot);
                            best_pos = pos;
                            best_target = target;
                        }
                    }
                }
            }
            if (best_robot < 0) break;
            apply_insert(r, best_robot, best_pos, best_target, best_delta);
            routed[best_target] = 1;
        }
        return r;
    }

    void apply_insert(Routes& r, int robot, int pos, int target, long delta) {
        r.seq[robot].insert(r.seq[robot].begin() + pos, target);
        r.cost[robot] += static_cast<int>(delta);
        r.total_cost += static_cast<int>(delta);
        ++r.covered;
    }

    void apply_remove(Routes& r, int robot, int pos) {
        const int target = r.seq[robot][pos];
        const int prev = pos == 0 ? in_.starts[robot] : r.seq[robot][pos - 1];
        long delta = -hops(prev, target);
        if (pos + 1 < static_cast<int>(r.seq[robot].size())) {
            const int next = r.seq[robot][pos + 1];
            delta += hops(prev, next) - hops(target, next);
        }
        r.seq[robot].erase(r.seq[robot].begin() + pos);
        r.cost[robot] += static_cast<int>(delta);
        r.total_cost += static_cast<int>(delta);
        --r.covered;
    }

    // Energy: covering one more target always wins at low temperature (the
    // weight exceeds any feasible detour of 2 * horizon hops), while at high
    // temperature a removal that frees a long detour can still be accepted.
    long energy(const Routes& r) const {
        return -static_cast<long>(2 * in_.horizon + 2) * r.covered + r.total_cost;
    }

    void anneal(Routes& current, Routes& best, int max_moves,
                std::chrono::steady_clock::time_point deadline) {
        if (in_.targets.empty()) return;
        const int n_robots = static_cast<int>(in_.starts.size());
        double temp = 3.0;
        const double cool = max_moves > 0 ? std::pow(0.02 / temp, 1.0 / max_moves) : 1.0;
        for (int move = 0; move < max_moves; ++move) {
            if ((move & 1023) == 0 && std::chrono::steady_clock::now() > deadline) break;
            temp *= cool;
            Routes candidate = current;
            if (!propose(candidate, n_robots)) continue;
            const long delta = energy(candidate) - energy(current);
            if (delta <= 0 || rng_.uniform01() < std::exp(-static_cast<double>(delta) / temp)) {
                current = std::move(candidate);
                if (current.better_than(best)) best = current;
            }
        }
    }

    // Deterministic steepest-descent sweeps: insert every target that fits,
    // then relocations and intra-route reversals that shorten the routes
    // (freed budget can admit more insertions on the next sweep).
    void polish(Routes& r) {
        const int n_robots = static_cast<int>(in_.starts.size());
        for (bool improved = true; improved;) {
            improved = false;
            const int covered_before = r.covered;
            refill(r);
            improved = r.covered > covered_before;
            // Relocation sweep: move any stop, or chain of 2-3 consecutive
            // stops, to a strictly cheaper placement.
            for (int chain = 1; chain <= 3; ++chain) {
                for (int robot = 0; robot < n_robots; ++robot) {
                    for (int pos = 0;
                         pos + chain <= static_cast<int>(r.seq[robot].size());) {
                        Routes trial = r;
                        const std::vector<int> segment(trial.seq[robot].begin() + pos,
                                                       trial.seq[robot].begin() + pos + chain);
                        trial.seq[robot].erase(trial.seq[robot].begin() + pos,
                                               trial.seq[robot].begin() + pos + chain);
                        if (!recost(trial, {robot})) {
                            ++pos;
                            continue;
                        }
                        trial.covered -= chain;
                        Routes best_trial;
                        bool found = false;
                        for (int rb = 0; rb < n_robots; ++rb) {
                            for (int p = 0; p <= static_cast<int>(trial.seq[rb].size()); ++p) {
                                Routes t2 = trial;
                                t2.seq[rb].insert(t2.seq[rb].begin() + p, segment.begin(),
                                                  segment.end());
                                if (!recost(t2, {rb})) continue;
                                t2.covered += chain;
                                if (t2.total_cost < r.total_cost &&
                                    (!found || t2.total_cost < best_trial.total_cost)) {
                                    best_trial = std::move(t2);
                                    found = true;
                                }
                            }
                        }
                        if (found) {
                            r = std::move(best_trial);
                            improved = true;
                            continue;  // rescan this position
                        }
                        ++pos;
                    }
                }
            }
            // 2-opt sweep: reverse any segment that shortens its route.
            for (int robot = 0; robot < n_robots; ++robot) {
                const int n = static_cast<int>(r.seq[robot].size());
                for (int i = 0; i < n - 1; ++i) {
                    for (int j = i + 1; j < n; ++j) {
                        Routes trial = r;
                        std::reverse(trial.seq[robot].begin() + i,
                                     trial.seq[robot].begin() + j + 1);
                        if (!recost(trial, {robot})) continue;
                        if (trial.total_cost < r.total_cost) {
                            r = std::move(trial);
                            improved = true;
                        }
                    }
                }
            }
            // Remove-and-refill: dropping one stop can free exactly the
            // budget two cheaper stops need.
            for (int robot = 0; robot < n_robots && !improved; ++robot) {
                for (int pos = 0; pos < static_cast<int>(r.seq[robot].size()); ++pos) {
                    Routes trial = r;
                    apply_remove(trial, robot, pos);
                    refill(trial);
                    if (trial.covered > r.covered ||
                        (trial.covered == r.covered && trial.total_cost < r.total_cost)) {
                        r = std::move(trial);
                        improved = true;
                        break;
                    }
                }
            }
        }
    }

    // Cheapest-insertion until nothing fits (the polish insertion sweep).
    void refill(Routes& r) {
        const int n_robots = static_cast<int>(in_.starts.size());
        for (;;) {
            std::vector<char> routed(in_.graph->size(), 0);
            for (const auto& seq : r.seq)
                for (int t : seq) routed[t] = 1;
            long best_delta = kInfeasible;
            int best_robot = -1, best_pos = -1, best_target = -1;
            for (int target : in_.targets) {
                if (routed[target]) continue;
                for (int robot = 0; robot < n_robots; ++robot) {
                    for (int pos = 0; pos <= static_cast<int>(r.seq[robot].size()); ++pos) {
                        const long delta = delta_insert(r, robot, pos, target);
                        if (delta >= kInfeasible || r.cost[robot] + delta > in_.horizon)
                            continue;
                        if (delta < best_delta) {
                            best_delta = delta;
                            best_robot = robot;
                            best_pos = pos;
                            best_target = target;
                        }
                    }
                }
            }
            if (best_robot < 0) break;
            apply_insert(r, best_robot, best_pos, best_target, best_delta);
        }
    }

    // Mutate candidate in place; false when the move is infeasible/void.
    bool propose(Routes& r, int n_robots) {
        switch (rng_.below(6)) {
            case 0: return move_insert(r, n_robots);
            case 1: return move_remove(r, n_robots);
            case 2: return move_relocate(r, n_robots);
            case 3: return move_swap(r, n_robots);
            case 4: return move_two_opt(r, n_robots);
            default: return move_or_opt(r, n_robots);
        }
    }

    bool move_insert(Routes& r, int n_robots) {
        std::vector<char> routed(in_.graph->size(), 0);
        for (const auto& seq : r.seq)
            for (int t : seq) routed[t] = 1;
        std::vector<int> unrouted;
        for (int t : in_.targets)
            if (!routed[t]) unrouted.push_back(t);
        if (unrouted.empty()) return false;
        const int target = unrouted[rng_.index(unrouted.size())];
        // Best feasible position across all routes.
        long best_delta = kInfeasible;
        int best_robot = -1, best_pos = -1;
        for (int robot = 0; robot < n_robots; ++robot) {
            for (int pos = 0; pos <= static_cast<int>(r.seq[robot].size()); ++pos) {
                const long delta = delta_insert(r, robot, pos, target);
                if (delta >= kInfeasible || r.cost[robot] + delta > in_.horizon) continue;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_robot = robot;
                    best_pos = pos;
                }
            }
        }
        if (best_robot < 0) return false;
        apply_insert(r, best_robot, best_pos, target, best_delta);
        return true;
    }

    bool move_remove(Routes& r, int n_robots) {
        const int robot = rng_.below(n_robots);
        if (r.seq[robot].empty()) return false;
        apply_remove(r, robot, rng_.index(r.seq[robot].size()));
        return true;
    }

    bool move_relocate(Routes& r, int n_robots) {
        const int from = rng_.below(n_robots);
        if (r.seq[from].empty()) return false;
        const int pos = rng_.index(r.seq[from].size());
        const int target = r.seq[from][pos];
        apply_remove(r, from, pos);
        long best_delta = kInfeasible;
        int best_robot = -1, best_pos = -1;
        for (int robot = 0; robot < n_robots; ++robot) {
            for (int p = 0; p <= static_cast<int>(r.seq[robot].size()); ++p) {
                const long delta = delta_insert(r, robot, p, target);
                if (delta >= kInfeasible || r.cost[robot] + delta > in_.horizon) continue;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_robot = robot;
                    best_pos = p;
                }
            }
        }
        if (best_robot < 0) return false;  // no feasible re-insertion: discard
        apply_insert(r, best_robot, best_pos, target, best_delta);
        return true;
    }

    bool move_swap(Routes& r, int n_robots) {
        const int ra = rng_.below(n_robots);
        const int rb = rng_.below(n_robots);
        if (r.seq[ra].empty() || r.seq[rb].empty()) return false;
        const int pa = rng_.index(r.seq[ra].size());
        const int pb = rng_.index(r.seq[rb].size());
        if (ra == rb && pa == pb) return false;
        std::swap(r.seq[ra][pa], r.seq[rb][pb]);
        return recost(r, {ra, rb});
    }

    bool move_two_opt(Routes& r, int n_robots) {
        const int robot = rng_.below(n_robots);
        const int n = static_cast<int>(r.seq[robot].size());
        if (n < 2) return false;
        int a = rng_.below(n), b = rng_.below(n);
        if (a == b) return false;
        if (a > b) std::swap(a, b);
        std::reverse(r.seq[robot].begin() + a, r.seq[robot].begin() + b + 1);
        return recost(r, {robot});
    }

    bool move_or_opt(Routes& r, int n_robots) {
        const int from = rng_.below(n_robots);
        const int n = static_cast<int>(r.seq[from].size());
        if (n < 2) return false;
        const int chain = 2 + static_cast<int>(rng_.below(2));  // 2 or 3
        if (n < chain) return false;
        const int pos = rng_.below(n - chain + 1);
        std::vector<int> segment(r.seq[from].begin() + pos, r.seq[from].begin() + pos + chain);
        r.seq[from].erase(r.seq[from].begin() + pos, r.seq[from].begin() + pos + chain);
        const int to = rng_.below(n_robots);
        const int insert_at = rng_.index(r.seq[to].size() + 1);
        r.seq[to].insert(r.seq[to].begin() + insert_at, segment.begin(), segment.end());
        return recost(r, {from, to});
    }

    // Recompute costs of the touched routes; false when any leg became
    // unreachable or exceeds the horizon (caller discards the candidate).
    bool recost(Routes& r, std::initializer_list<int> robots) {
        for (int robot : robots) {
            const int fresh = route_cost(robot, r.seq[robot]);
            if (fresh < 0 || fresh > in_.horizon) return false;
            r.total_cost += fresh - r.cost[robot];
            r.cost[robot] = fresh;
        }
        return true;
    }

    static constexpr long kInfeasible = 1L << 40;

    PlannerInput in_;
    DistanceTable table_;
    ExpertConfig config_;
    Rng rng_;
};

// Shortest hop path (smallest-id tie-break) over the visible graph.
std::vector<int> shortest_path(const SpatialGraph& graph, int from, int to,
                               const std::vector<char>* visible) {
    const auto dist_to = bfs_hops(graph, to, kUnboundedHops, visible);
    if (dist_to[from] < 0) throw std::runtime_error("shortest_path: unreachable target");
    std::vector<int> path{from};
    int u = from;
    while (u != to) {
        int next = -1;
        for (int k : graph.adjacency[u]) {
            if (dist_to[k] == dist_to[u] - 1) {
                next = k;
                break;  // adjacency sorted: first hit is the smallest id
            }
        }
        path.push_back(next);
        u = next;
    }
    return path;
}

RoutePlan expand_plan(const PlannerInput& in, const Routes& routes) {
    RoutePlan plan;
    plan.horizon = in.horizon;
    plan.paths.resize(in.starts.size());
    for (size_t robot = 0; robot < in.starts.size(); ++robot) {
        auto& path = plan.paths[robot];
        path.push_back(in.starts[robot]);
        for (int target : routes.seq[robot]) {
            const auto leg = shortest_path(*in.graph, path.back(), target, in.visible);
            path.insert(path.end(), leg.begin() + 1, leg.end());
        }
    }
    return plan;
}

RoutePlan plan_routes(const WorldState& state, int horizon, const ExpertConfig& config,
                      bool restrict_to_explored) {
    PlannerInput in;
    in.graph = state.graph.get();
    in.starts = state.robot_at;
    in.visible = restrict_to_explored ? &state.explored : nullptr;
    in.horizon = std::max(horizon, 0);
    for (int w = 0; w < state.graph->size(); ++w)
        if (state.interest[w] && (!restrict_to_explored || state.explored[w]))
            in.targets.push_back(w);

    RoutePlanner planner(in, config);
    std::vector<Routes> candidates = planner.plan_candidates();

    // The collision priority rule makes the same routes execute differently
    // depending on which robot runs them and in which direction; small teams
    // get assignment permutations and reversals as extra candidates.
    const size_t base_count = candidates.size();
    for (size_t c = 0; c < base_count; ++c) {
        if (in.starts.size() >= 2 && in.starts.size() <= 4) {
            std::vector<int> perm(in.starts.size());
            for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
            while (std::next_permutation(perm.begin(), perm.end())) {
                Routes variant = candidates[c];
                for (size_t i = 0; i < perm.size(); ++i)
                    variant.seq[i] = candidates[c].seq[perm[i]];
                if (planner.try_recost_all(variant)) candidates.push_back(std::move(variant));
            }
        }
        for (size_t i = 0; i < in.starts.size(); ++i) {
            if (candidates[c].seq[i].size() < 2) continue;
            Routes variant = candidates[c];
            std::reverse(variant.seq[i].begin(), variant.seq[i].end());
            if (planner.try_recost_all(variant)) candidates.push_back(std::move(variant));
        }
    }

    // Collision resolution and pass-through pickups make planned coverage an
    // approximation; pick the candidate that realizes the most reward under
    // the exact step semantics. A partially observing planner only scores
    // interest it can see.
    WorldState belief = state;
    if (restrict_to_explored)
        for (int w = 0; w < belief.graph->size(); ++w)
            belief.interest[w] = belief.interest[w] && belief.explored[w];
    belief.horizon = belief.timestep + in.horizon;

    RoutePlan best_plan;
    int best_realized = -1;
    int best_cost = 0;
    for (const Routes& routes : candidates) {
        RoutePlan plan = expand_plan(in, routes);
        WorldState sim = belief;
        PlanExecutor executor(plan);
        int realized = 0;
        for (int t = 0; t < in.horizon; ++t) realized += step(sim, executor.next(sim));
        if (realized > best_realized ||
            (realized == best_realized && routes.total_cost < best_cost)) {
            best_realized = realized;
            best_cost = routes.total_cost;
            best_plan = std::move(plan);
        }
    }
    return best_plan;
}

}  // namespace

RoutePlan vrp_expert(const WorldState& state, int horizon, const ExpertConfig& config) {
    RoutePlan plan = plan_routes(state, horizon, config, false);
    plan.validate(state);
    return plan;
}

JointAction receding_horizon(const WorldState& state, int plan_horizon,
                             const ExpertConfig& config) {
    const int remaining = state.horizon - state.timestep;
    const int horizon = std::min(plan_horizon, remaining);
    ExpertConfig step_config = config;
    step_config.seed = Rng::derive(config.seed, static_cast<uint64_t>(state.timestep));
    const bool partial = state.mode == Mode::exploration;
    RoutePlan plan = plan_routes(state, horizon, step_config, partial);
    plan.validate(state);
    return plan.action_at(0);
}

JointAction greedy_controller(const WorldState& state, int max_hops) {
    const auto& graph = *state.graph;
    const std::vector<char>* visible =
        state.mode == Mode::exploration ? &state.explored : nullptr;
    JointAction action;
    action.target.reserve(state.robot_at.size());
    for (int q : state.robot_at) {
        const auto dist = bfs_hops(graph, q, max_hops, visible);
        int target = -1;
        int best = kUnboundedHops;
        for (int w = 0; w < graph.size(); ++w) {
            if (!state.interest[w] || dist[w] < 0) continue;
            if (visible && !(*visible)[w]) continue;
            if (dist[w] < best) {
                best = dist[w];
                target = w;
            }
        }
        if (target < 0) {
            action.target.push_back(kStay);
            continue;
        }
        const auto dist_to = bfs_hops(graph, target, best, visible);
        int next = -1;
        for (int k : graph.adjacency[q]) {
            if (dist_to[k] == best - 1) {
                next = k;
                break;
            }
        }
        action.target.push_back(next);
    }
    return action;
}

namespace {

struct OracleContext {
    std::vector<WorldState> scratch;          // one reusable state per depth
    std::vector<std::vector<JointAction>> children;  // per depth
    std::vector<JointAction> stack;
    OracleResult best;
    std::vector<char> reach_now, reach_next;  // BFS scratch

    // Interest reachable within `steps` hops of any robot; much tighter than
    // the raw interest count when robots are far from the remaining targets.
    int reachable_interest(const WorldState& state, int steps) {
        const auto& graph = *state.graph;
        reach_now.assign(graph.size(), 0);
        for (int q : state.robot_at) reach_now[q] = 1;
        int count = 0;
        for (int w = 0; w < graph.size(); ++w)
            if (reach_now[w] && state.interest[w]) ++count;
        for (int d = 0; d < steps; ++d) {
            reach_next = reach_now;
            bool grew = false;
            for (int w = 0; w < graph.size(); ++w) {
                if (!reach_now[w]) continue;
                for (int k : graph.adjacency[w]) {
                    if (!reach_next[k]) {
                        reach_next[k] = 1;
                        grew = true;
                        if (state.interest[k]) ++count;
                    }
                }
            }
            std::swap(reach_now, reach_next);
            if (!grew) break;
        }
        return count;
    }
};

void oracle_search(OracleContext& ctx, const WorldState& state, int depth, int steps_left,
                   int reward_so_far) {
    if (reward_so_far > ctx.best.best_reward) {
        ctx.best.best_reward = reward_so_far;
        ctx.best.actions = ctx.stack;
    }
    if (steps_left == 0) return;
    const int bound = std::min(ctx.reachable_interest(state, steps_left),
                               steps_left * state.num_robots());
    if (reward_so_far + bound <= ctx.best.best_reward) return;

    const int n_robots = state.num_robots();
    auto& children = ctx.children[depth];
    children.clear();
    JointAction action;
    action.target.assign(n_robots, kStay);
    std::vector<size_t> pick(n_robots, 0);
    std::vector<std::vector<int>> options(n_robots);
    for (int i = 0; i < n_robots; ++i) {
        options[i].push_back(kStay);
        for (int k : state.graph->adjacency[state.robot_at[i]]) options[i].push_back(k);
    }
    for (;;) {
        for (int i = 0; i < n_robots; ++i) action.target[i] = options[i][pick[i]];
        children.push_back(action);
        int i = 0;
        for (; i < n_robots; ++i) {
            if (++pick[i] < options[i].size()) break;
            pick[i] = 0;
        }
        if (i == n_robots) break;
    }

    // Expand interest-gaining moves first so the bound prunes earlier.
    std::stable_sort(children.begin(), children.end(),
                     [&](const JointAction& a, const JointAction& b) {
                         int ra = 0, rb = 0;
                         for (int t : a.target) ra += t != kStay && state.interest[t];
                         for (int t : b.target) rb += t != kStay && state.interest[t];
                         return ra > rb;
                     });

    for (const JointAction& child : children) {
        WorldState& next = ctx.scratch[depth];
        next = state;  // reuses the scratch buffers
        const int r = step(next, child);
        ctx.stack.push_back(child);
        oracle_search(ctx, next, depth + 1, steps_left - 1, reward_so_far + r);
        ctx.stack.pop_back();
    }
}

}  // namespace

OracleResult brute_force_oracle(const WorldState& state, int horizon) {
    if (horizon < 0) throw std::invalid_argument("brute_force_oracle: negative horizon");
    int max_degree = 0;
    for (const auto& nbrs : state.graph->adjacency)
        max_degree = std::max(max_degree, static_cast<int>(nbrs.size()));
    const double space =
        std::pow(max_degree + 1.0, static_cast<double>(state.num_robots()) * horizon);
    if (space > 1e7) throw std::invalid_argument("brute_force_oracle: search space too large");

    OracleContext ctx;
    ctx.scratch.resize(horizon + 1);
    ctx.children.resize(horizon + 1);
    WorldState root = state;
    root.horizon = state.timestep + horizon;  // allow exactly `horizon` steps
    oracle_search(ctx, root, 0, horizon, 0);
    OracleResult best = std::move(ctx.best);
    // Pad to a full-length sequence; trailing stays add no reward.
    while (static_cast<int>(best.actions.size()) < horizon)
        best.actions.push_back(JointAction{std::vector<int>(state.num_robots(), kStay)});
    return best;
}

Controller make_greedy_controller(int max_hops) {
    return [max_hops](const WorldState& state) { return greedy_controller(state, max_hops); };
}

Controller make_receding_horizon_controller(int plan_horizon, ExpertConfig config) {
    return [plan_horizon, config](const WorldState& state) {
        return receding_horizon(state, plan_horizon, config);
    };
}

Controller make_open_loop_expert_controller(ExpertConfig config) {
    auto executor = std::make_shared<std::unique_ptr<PlanExecutor>>();
    return [config, executor](const WorldState& state) {
        if (!*executor) {
            RoutePlan plan = vrp_expert(state, state.horizon - state.timestep, config);
            *executor = std::make_unique<PlanExecutor>(std::move(plan));
        }
        return (*executor)->next(state);
    };
}

}  // namespace covgnn
