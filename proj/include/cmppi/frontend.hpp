#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "cmppi/costs.hpp"
#include "cmppi/environment.hpp"
#include "cmppi/rng.hpp"

namespace cmppi {

/// 2-D waypoint path; the first waypoint is always the query start.
struct Path {
    std::vector<Eigen::Vector2d> waypoints;

    double length() const {
        double len = 0.0;
        for (std::size_t i = 1; i < waypoints.size(); ++i)
            len += (waypoints[i] - waypoints[i - 1]).norm();
        return len;
    }
};

/// Roadmap and seeding configuration.
struct FrontendParams {
    double p_safe = 0.3;        // fraction of roadmap samples drawn inside safe zones
    int max_paths = 3;          // B
    int knot_count = 8;         // M
    int prm_samples = 120;
    int knn = 8;                // edge candidates per node
    double connect_radius = 3.0;
    double v_target_frac = 0.8; // knot timing speed as a fraction of v_max
    double tol_con = 1e-6;      // constraint re-verification tolerance, m
    int nmpc_max_outer = 8;
    int nmpc_max_inner = 60;
};

/// r_max = V_max * T_s * dt: how far the vehicle can travel inside the
/// contingency-checked prefix.
inline double reach_radius(double v_max, int t_safe, double dt) { return v_max * t_safe * dt; }

// ---------------------------------------------------------------------------
// Pseudo-obstacles
// ---------------------------------------------------------------------------

/// Marks every cell farther than r_max from all safe zones as Occupied,
/// leaving other statuses untouched. Zone centers are snapped to their cell
/// centers so the zone's own cell always survives, even at r_max = 0.
inline OccupancyGrid add_pseudo_obstacles(const OccupancyGrid& grid,
                                          std::span<const SafeZone> zones, double r_max) {
    if (r_max < 0.0) throw std::invalid_argument("r_max must be non-negative");
    std::vector<Eigen::Vector2d> anchors;
    anchors.reserve(zones.size());
    for (const auto& z : zones)
        anchors.emplace_back(grid.center_x(grid.cell_x(z.x)), grid.center_y(grid.cell_y(z.y)));
    OccupancyGrid out = grid;
    const double r2 = r_max * r_max;
    for (int iy = 0; iy < grid.height; ++iy) {
        const double cy = grid.center_y(iy);
        for (int ix = 0; ix < grid.width; ++ix) {
            if (out.at(ix, iy) == Cell::Occupied) continue;
            const double cx = grid.center_x(ix);
            bool reachable = false;
            for (const auto& a : anchors) {
                const double dx = cx - a[0], dy = cy - a[1];
                if (dx * dx + dy * dy <= r2) {
                    reachable = true;
                    break;
                }
            }
            if (!reachable) out.ref(ix, iy) = Cell::Occupied;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Roadmap
// ---------------------------------------------------------------------------

namespace detail {

/// Segment visibility on a grid: sampled at half-resolution steps, blocked
/// only by Occupied cells (Unknown is traversable for global guidance).
inline bool segment_visible(const OccupancyGrid& grid, const Eigen::Vector2d& a,
                            const Eigen::Vector2d& b) {
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid.resolution))));
    for (int i = 0; i <= steps; ++i) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / steps);
        if (grid.at_point(p[0], p[1]) == Cell::Occupied) return false;
    }
    return true;
}

/// Two paths are topologically equivalent when corresponding points of their
/// uniform discretizations are mutually visible.
inline bool paths_equivalent(const OccupancyGrid& grid, const Path& a, const Path& b,
                             int n_points = 20) {
    auto point_at = [](const Path& p, double s) {
        double target = s * p.length();
        for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
            const double seg = (p.waypoints[i] - p.waypoints[i - 1]).norm();
            if (target <= seg || i + 1 == p.waypoints.size()) {
                const double t = seg > 0.0 ? std::clamp(target / seg, 0.0, 1.0) : 0.0;
                return Eigen::Vector2d(p.waypoints[i - 1] + t * (p.waypoints[i] - p.waypoints[i - 1]));
            }
            target -= seg;
        }
        return p.waypoints.back();
    };
    for (int i = 0; i <= n_points; ++i) {
        const double s = static_cast<double>(i) / n_points;
        if (!segment_visible(grid, point_at(a, s), point_at(b, s))) return false;
    }
    return true;
}

/// Greedy shortcutting: repeatedly bridge the farthest visible waypoint.
inline void shortcut_path(const OccupancyGrid& grid, Path& path) {
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 16) {
        changed = false;
        std::vector<Eigen::Vector2d> out;
        out.push_back(path.waypoints.front());
        std::size_t i = 0;
        while (i + 1 < path.waypoints.size()) {
            std::size_t j = path.waypoints.size() - 1;
            for (; j > i + 1; --j)
                if (segment_visible(grid, path.waypoints[i], path.waypoints[j])) break;
            if (j > i + 1) changed = true;
            out.push_back(path.waypoints[j]);
            i = j;
        }
        path.waypoints = std::move(out);
    }
}

} // namespace detail

/// Multi-path roadmap query on the pseudo-obstacle-biased grid. Samples are
/// drawn from safe-zone interiors with probability p_safe, uniformly from
/// non-blocked space otherwise. Up to max_paths topologically distinct,
/// shortcut paths from start toward the goal (or toward the reachable node
/// closest to the goal when the goal sits inside pseudo-obstacles) are
/// returned, ordered by length. An empty result means no route was found.
inline std::vector<Path> topo_prm(const OccupancyGrid& biased, const Eigen::Vector2d& start,
                                  const Eigen::Vector2d& goal, std::span<const SafeZone> zones,
                                  const FrontendParams& p, RngKey key) {
    if (biased.at_point(start[0], start[1]) == Cell::Occupied) return {};

    SplitMix64 eng = key.engine();
    std::uniform_real_distribution<double> ux(biased.min_x(), biased.max_x());
    std::uniform_real_distribution<double> uy(biased.min_y(), biased.max_y());
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<Eigen::Vector2d> nodes{start, goal};
    const bool goal_open = biased.at_point(goal[0], goal[1]) != Cell::Occupied;
    int attempts = 0;
    while (static_cast<int>(nodes.size()) < p.prm_samples + 2 && attempts++ < p.prm_samples * 60) {
        Eigen::Vector2d cand;
        if (!zones.empty() && u01(eng) < p.p_safe) {
            const auto& z = zones[static_cast<std::size_t>(eng() % zones.size())];
            const double ang = u01(eng) * 2.0 * std::numbers::pi;
            const double rad = z.r * std::sqrt(u01(eng));
            cand = Eigen::Vector2d(z.x + rad * std::cos(ang), z.y + rad * std::sin(ang));
        } else {
            cand = Eigen::Vector2d(ux(eng), uy(eng));
        }
        if (biased.at_point(cand[0], cand[1]) == Cell::Occupied) continue;
        nodes.push_back(cand);
    }

    // visibility edges to the nearest neighbours within the connect radius
    const int n = static_cast<int>(nodes.size());
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> near;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = (nodes[static_cast<std::size_t>(j)] - nodes[static_cast<std::size_t>(i)]).norm();
            if (d <= p.connect_radius) near.emplace_back(d, j);
        }
        std::sort(near.begin(), near.end());
        int added = 0;
        for (const auto& [d, j] : near) {
            if (added >= p.knn) break;
            if (!detail::segment_visible(biased, nodes[static_cast<std::size_t>(i)],
                                         nodes[static_cast<std::size_t>(j)]))
                continue;
            adj[static_cast<std::size_t>(i)].emplace_back(j, d);
            ++added;
        }
    }

    // repeated Dijkstra with edge penalization digs out alternative routes
    std::vector<std::vector<double>> penalty(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        penalty[static_cast<std::size_t>(i)].assign(adj[static_cast<std::size_t>(i)].size(), 1.0);

    auto dijkstra = [&](int from) {
        std::vector<double> dist(static_cast<std::size_t>(n), kInf);
        std::vector<int> prev(static_cast<std::size_t>(n), -1);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[static_cast<std::size_t>(from)] = 0.0;
        pq.emplace(0.0, from);
        while (!pq.empty()) {
            const auto [d, v] = pq.top();
            pq.pop();
            if (d > dist[static_cast<std::size_t>(v)]) continue;
            for (std::size_t e = 0; e < adj[static_cast<std::size_t>(v)].size(); ++e) {
                const auto [to, w] = adj[static_cast<std::size_t>(v)][e];
                const double nd = d + w * penalty[static_cast<std::size_t>(v)][e];
                if (nd < dist[static_cast<std::size_t>(to)]) {
                    dist[static_cast<std::size_t>(to)] = nd;
                    prev[static_cast<std::size_t>(to)] = v;
                    pq.emplace(nd, to);
                }
            }
        }
        return std::make_pair(std::move(dist), std::move(prev));
    };

    // pick the target: the goal node when it is connected, otherwise the
    // reachable node closest to the goal
    int target = 1;
    {
        const auto [dist, prev] = dijkstra(0);
        if (!goal_open || !std::isfinite(dist[1])) {
            double best = kInf;
            target = -1;
            for (int i = 2; i < n; ++i) {
                if (!std::isfinite(dist[static_cast<std::size_t>(i)])) continue;
                const double d = (nodes[static_cast<std::size_t>(i)] - goal).norm();
                if (d < best) {
                    best = d;
                    target = i;
                }
            }
            if (target < 0) return {};
        }
    }

    auto penalize_edge = [&](int v, int to) {
        for (std::size_t e = 0; e < adj[static_cast<std::size_t>(v)].size(); ++e)
            if (adj[static_cast<std::size_t>(v)][e].first == to)
                penalty[static_cast<std::size_t>(v)][e] *= 4.0;
    };

    std::vector<Path> raw;
    for (int attempt = 0; attempt < p.max_paths * 3; ++attempt) {
        const auto [dist, prev] = dijkstra(0);
        if (!std::isfinite(dist[static_cast<std::size_t>(target)])) break;
        std::vector<int> chain;
        for (int v = target; v != -1; v = prev[static_cast<std::size_t>(v)]) chain.push_back(v);
        std::reverse(chain.begin(), chain.end());
        // penalize the used edges so the next query prefers another homotopy
        for (std::size_t i = 1; i < chain.size(); ++i) {
            penalize_edge(chain[i - 1], chain[i]);
            penalize_edge(chain[i], chain[i - 1]);
        }
        Path path;
        path.waypoints.reserve(chain.size());
        for (int v : chain) path.waypoints.push_back(nodes[static_cast<std::size_t>(v)]);
        detail::shortcut_path(biased, path);
        raw.push_back(std::move(path));
    }

    // drop topological duplicates, keep the shortest representative
    std::vector<Path> distinct;
    for (auto& cand : raw) {
        bool dup = false;
        for (auto& kept : distinct) {
            if (detail::paths_equivalent(biased, cand, kept)) {
                if (cand.length() < kept.length()) kept = cand;
                dup = true;
                break;
            }
        }
        if (!dup) distinct.push_back(std::move(cand));
    }
    std::sort(distinct.begin(), distinct.end(),
              [](const Path& a, const Path& b) { return a.length() < b.length(); });
    if (static_cast<int>(distinct.size()) > p.max_paths)
        distinct.resize(static_cast<std::size_t>(p.max_paths));
    return distinct;
}

/// Arc-length truncation: the point r_max along the path, or its final
/// waypoint when the path is shorter.
inline Eigen::Vector2d truncate_path(const Path& path, double r_max) {
    if (path.waypoints.empty()) throw std::invalid_argument("empty path");
    double remaining = r_max;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const Eigen::Vector2d seg = path.waypoints[i] - path.waypoints[i - 1];
        const double len = seg.norm();
        if (remaining <= len)
            return len > 0.0 ? Eigen::Vector2d(path.waypoints[i - 1] + seg * (remaining / len))
                             : path.waypoints[i - 1];
        remaining -= len;
    }
    return path.waypoints.back();
}

} // namespace cmppi
