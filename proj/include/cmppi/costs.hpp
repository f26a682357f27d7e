#pragma once

#include <limits>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

#include "cmppi/environment.hpp"

namespace cmppi {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Hard-constraint indicator cost: 0 when satisfied, +inf otherwise.
/// Additive across constraints under IEEE extended-real arithmetic.
inline double penalty(bool satisfied) { return satisfied ? 0.0 : kInf; }

/// Point-to-safe-set distance: ||p - center|| - r, floored at 0.
inline double dist_to_zone(double x, double y, const SafeZone& z) {
    const double d = std::hypot(x - z.x, y - z.y) - z.r;
    return d > 0.0 ? d : 0.0;
}

inline double min_dist_to_safe(double x, double y, std::span<const SafeZone> zones) {
    if (zones.empty()) throw std::invalid_argument("no safe zones configured");
    double best = kInf;
    for (const auto& z : zones) best = std::min(best, dist_to_zone(x, y, z));
    return best;
}

/// Smallest floored distance from any state's workspace point to the safe
/// set. Zero exactly when some state lies inside some zone.
inline double min_dist_to_safe(std::span<const State> states, std::span<const SafeZone> zones) {
    if (zones.empty()) throw std::invalid_argument("no safe zones configured");
    double best = kInf;
    for (const auto& s : states) best = std::min(best, min_dist_to_safe(s.x, s.y, zones));
    return best;
}

/// Quadratic goal-tracking cost over the position coordinates of every state
/// in the span, sum of (p - goal)^T Q (p - goal).
inline double nominal_cost(std::span<const State> states, const Eigen::Vector2d& goal,
                           const Eigen::Matrix2d& Q) {
    double total = 0.0;
    for (const auto& s : states) {
        const Eigen::Vector2d e(s.x - goal[0], s.y - goal[1]);
        total += e.dot(Q * e);
    }
    return total;
}

/// Known-space gate: 0 iff the first t_safe states sit on cells revealed as
/// Free in the belief grid, +inf otherwise. Exactly t_safe states are
/// checked (indices 0 .. t_safe-1).
inline double known_space_cost(std::span<const State> states, const OccupancyGrid& known,
                               int t_safe) {
    if (t_safe > static_cast<int>(states.size()))
        throw std::invalid_argument("t_safe exceeds state sequence length");
    for (int i = 0; i < t_safe; ++i) {
        const State& s = states[static_cast<std::size_t>(i)];
        if (known.at_point(s.x, s.y) != Cell::Free) return kInf;
    }
    return 0.0;
}

} // namespace cmppi
