#pragma once

#include <optional>
#include <vector>

#include "cmppi/frontend.hpp"

namespace cmppi {

/// Convex region as intersection of half-planes a_i . p <= b_i with unit
/// normals. The decomposition below produces axis-aligned rectangles.
struct Polytope {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    bool contains(const Eigen::Vector2d& p, double tol = 0.0) const {
        return ((A * p - b).array() <= tol).all();
    }

    /// Smallest slack b_i - a_i.p; positive strictly inside.
    double margin(const Eigen::Vector2d& p) const { return (b - A * p).minCoeff(); }
};

/// One polytope per knot; knot i is contained in polytopes[i] with margin.
struct Decomposition {
    std::vector<Eigen::Vector2d> knots;
    std::vector<Polytope> polytopes;
};

namespace detail {

inline Polytope box_polytope(double lo_x, double lo_y, double hi_x, double hi_y) {
    Polytope p;
    p.A.resize(4, 2);
    p.b.resize(4);
    p.A << 1, 0, -1, 0, 0, 1, 0, -1;
    p.b << hi_x, -lo_x, hi_y, -lo_y;
    return p;
}

/// All cell centers inside [lo_x,hi_x] x [lo_y,hi_y] must be Free.
inline bool box_free(const OccupancyGrid& g, double lo_x, double lo_y, double hi_x, double hi_y) {
    const int ix0 = g.cell_x(lo_x), ix1 = g.cell_x(hi_x);
    const int iy0 = g.cell_y(lo_y), iy1 = g.cell_y(hi_y);
    for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double cx = g.center_x(ix), cy = g.center_y(iy);
            if (cx < lo_x || cx > hi_x || cy < lo_y || cy > hi_y) continue;
            if (g.at(ix, iy) != Cell::Free) return false;
        }
    return true;
}

/// Grows a seed box one resolution step per face, round-robin, until each
/// face hits a non-Free cell or the map edge; then shrinks by robot_radius.
inline std::optional<Polytope> inflate_box(const OccupancyGrid& g, double lo_x, double lo_y,
                                           double hi_x, double hi_y, double robot_radius) {
    if (!box_free(g, lo_x, lo_y, hi_x, hi_y)) return std::nullopt;
    const double step = g.resolution;
    bool grow[4] = {true, true, true, true};  // -x, +x, -y, +y
    while (grow[0] || grow[1] || grow[2] || grow[3]) {
        if (grow[0]) {
            if (box_free(g, lo_x - step, lo_y, lo_x, hi_y)) lo_x -= step;
            else grow[0] = false;
        }
        if (grow[1]) {
            if (box_free(g, hi_x, lo_y, hi_x + step, hi_y)) hi_x += step;
            else grow[1] = false;
        }
        if (grow[2]) {
            if (box_free(g, lo_x, lo_y - step, hi_x, lo_y)) lo_y -= step;
            else grow[2] = false;
        }
        if (grow[3]) {
            if (box_free(g, lo_x, hi_y, hi_x, hi_y + step)) hi_y += step;
            else grow[3] = false;
        }
    }
    lo_x += robot_radius;
    hi_x -= robot_radius;
    lo_y += robot_radius;
    hi_y -= robot_radius;
    if (lo_x >= hi_x || lo_y >= hi_y) return std::nullopt;
    return box_polytope(lo_x, lo_y, hi_x, hi_y);
}

inline Eigen::Vector2d path_point_at(const Path& path, double arc) {
    double remaining = arc;
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

} // namespace detail

/// Places M knots equally spaced by arc length from the path start to the
/// point r_max along it, then inflates one free-space rectangle per knot.
/// The seed box spans the knot's forward segment padded by robot_radius plus
/// one cell, falling back to a knot-centered seed when the segment's
/// bounding box clips an obstacle (sharp corners). After shrinking by
/// robot_radius every knot is strictly inside its rectangle; any knot for
/// which no seed is free fails the whole path (nullopt), e.g. a knot within
/// robot_radius of a wall.
inline std::optional<Decomposition> convex_decompose(const OccupancyGrid& grid, const Path& path,
                                                     double r_max, int knot_count,
                                                     double robot_radius) {
    if (knot_count < 2) throw std::invalid_argument("need at least two knot points");
    if (path.waypoints.empty()) return std::nullopt;
    const double arc = std::min(r_max, path.length());
    if (arc <= 0.0) return std::nullopt;

    Decomposition out;
    out.knots.reserve(static_cast<std::size_t>(knot_count));
    for (int i = 0; i < knot_count; ++i)
        out.knots.push_back(detail::path_point_at(path, arc * i / (knot_count - 1)));

    const double pad = robot_radius + grid.resolution;
    out.polytopes.reserve(static_cast<std::size_t>(knot_count));
    for (int i = 0; i < knot_count; ++i) {
        const Eigen::Vector2d& a = out.knots[static_cast<std::size_t>(i)];
        const Eigen::Vector2d& b = out.knots[static_cast<std::size_t>(std::min(i + 1, knot_count - 1))];
        auto poly = detail::inflate_box(grid, std::min(a[0], b[0]) - pad, std::min(a[1], b[1]) - pad,
                                        std::max(a[0], b[0]) + pad, std::max(a[1], b[1]) + pad,
                                        robot_radius);
        if (!poly.has_value())
            poly = detail::inflate_box(grid, a[0] - pad, a[1] - pad, a[0] + pad, a[1] + pad,
                                       robot_radius);
        if (!poly.has_value()) return std::nullopt;
        if (poly->margin(a) <= 0.0) return std::nullopt;
        out.polytopes.push_back(std::move(*poly));
    }
    return out;
}

} // namespace cmppi
