#pragma once

#include <stdexcept>
#include <vector>

#include "cmppi/core.hpp"
#include "cmppi/grid.hpp"

namespace cmppi {

/// Disc-shaped safe zone.
struct SafeZone {
    double x = 0.0;
    double y = 0.0;
    double r = 0.5;

    bool operator==(const SafeZone&) const = default;
};

/// World model: ground-truth occupancy, the agent's belief grid (Unknown
/// until revealed), the safe set, and the task endpoints. Ground truth never
/// contains Unknown cells.
struct Environment {
    OccupancyGrid grid;   // ground truth
    OccupancyGrid known;  // belief; reveal() copies truth into it
    std::vector<SafeZone> safe_zones;
    State start;
    double goal_x = 0.0;
    double goal_y = 0.0;
    double sensing_radius = 3.0;
    double robot_radius = 0.2;
    double dt = 0.1;
    double v_max = 2.0;

    bool operator==(const Environment&) const = default;
};

inline Environment make_environment(OccupancyGrid grid, std::vector<SafeZone> zones, State start,
                                    double goal_x, double goal_y, double sensing_radius = 3.0,
                                    double robot_radius = 0.2, double dt = 0.1, double v_max = 2.0) {
    Environment env;
    env.known = OccupancyGrid::filled(grid.width, grid.height, Cell::Unknown, grid.resolution,
                                      grid.origin_x, grid.origin_y);
    env.grid = std::move(grid);
    env.safe_zones = std::move(zones);
    env.start = start;
    env.goal_x = goal_x;
    env.goal_y = goal_y;
    env.sensing_radius = sensing_radius;
    env.robot_radius = robot_radius;
    env.dt = dt;
    env.v_max = v_max;
    return env;
}

/// Checks the structural invariants: zone centers and goal on Free truth
/// cells, start collision-free, truth grid fully determined. Throws on the
/// first violation.
inline void validate_environment(const Environment& env) {
    if (env.grid.width <= 0 || env.grid.height <= 0)
        throw std::invalid_argument("environment grid is empty");
    if (env.dt <= 0.0 || env.v_max <= 0.0 || env.robot_radius < 0.0 || env.sensing_radius < 0.0)
        throw std::invalid_argument("environment scalar parameters out of range");
    for (const Cell c : env.grid.cells)
        if (c == Cell::Unknown) throw std::invalid_argument("ground-truth grid contains Unknown cells");
    for (const auto& z : env.safe_zones) {
        if (z.r <= 0.0) throw std::invalid_argument("safe zone radius must be positive");
        if (env.grid.at_point(z.x, z.y) != Cell::Free)
            throw std::invalid_argument("safe zone center not on a Free cell");
    }
    if (env.grid.at_point(env.goal_x, env.goal_y) != Cell::Free)
        throw std::invalid_argument("goal not on a Free cell");
    if (collides(env.grid, env.start, env.robot_radius))
        throw std::invalid_argument("start state is in collision");
    if (env.known.width != env.grid.width || env.known.height != env.grid.height ||
        env.known.resolution != env.grid.resolution)
        throw std::invalid_argument("belief grid geometry does not match ground truth");
}

/// Copies ground truth into the belief grid for every cell whose center lies
/// within sensing_radius of the state. Monotone: cells never un-reveal.
inline void reveal(Environment& env, const State& s) {
    if (env.sensing_radius <= 0.0) return;
    const double r = env.sensing_radius;
    const double r2 = r * r;
    const OccupancyGrid& g = env.grid;
    int ix0 = std::max(0, g.cell_x(s.x - r));
    int ix1 = std::min(g.width - 1, g.cell_x(s.x + r));
    int iy0 = std::max(0, g.cell_y(s.y - r));
    int iy1 = std::min(g.height - 1, g.cell_y(s.y + r));
    for (int iy = iy0; iy <= iy1; ++iy) {
        const double dy = g.center_y(iy) - s.y;
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double dx = g.center_x(ix) - s.x;
            if (dx * dx + dy * dy <= r2) env.known.ref(ix, iy) = g.at(ix, iy);
        }
    }
}

} // namespace cmppi
