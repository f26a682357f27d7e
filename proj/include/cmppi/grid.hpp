#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cmppi/core.hpp"

namespace cmppi {

enum class Cell : std::uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

/// 2-D occupancy grid, row-major. Anything outside the map reads as Occupied.
struct OccupancyGrid {
    double resolution = 0.1;  // m / cell
    double origin_x = 0.0;    // world coords of the lower-left map corner
    double origin_y = 0.0;
    int width = 0;   // cells
    int height = 0;  // cells
    std::vector<Cell> cells;

    static OccupancyGrid filled(int width, int height, Cell value, double resolution = 0.1,
                                double origin_x = 0.0, double origin_y = 0.0) {
        if (width <= 0 || height <= 0 || resolution <= 0.0)
            throw std::invalid_argument("grid dimensions and resolution must be positive");
        OccupancyGrid g;
        g.resolution = resolution;
        g.origin_x = origin_x;
        g.origin_y = origin_y;
        g.width = width;
        g.height = height;
        g.cells.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), value);
        return g;
    }

    bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height; }

    Cell at(int ix, int iy) const {
        if (!in_bounds(ix, iy)) return Cell::Occupied;
        return cells[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(ix)];
    }

    Cell& ref(int ix, int iy) {
        return cells[static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(ix)];
    }

    int cell_x(double wx) const { return static_cast<int>(std::floor((wx - origin_x) / resolution)); }
    int cell_y(double wy) const { return static_cast<int>(std::floor((wy - origin_y) / resolution)); }

    double center_x(int ix) const { return origin_x + (ix + 0.5) * resolution; }
    double center_y(int iy) const { return origin_y + (iy + 0.5) * resolution; }

    bool point_in_bounds(double wx, double wy) const { return in_bounds(cell_x(wx), cell_y(wy)); }

    /// Cell under a world point; Occupied when the point is off the map.
    Cell at_point(double wx, double wy) const { return at(cell_x(wx), cell_y(wy)); }

    double min_x() const { return origin_x; }
    double min_y() const { return origin_y; }
    double max_x() const { return origin_x + width * resolution; }
    double max_y() const { return origin_y + height * resolution; }

    /// Marks every cell whose center falls inside the axis-aligned rectangle.
    void fill_rect(double x0, double y0, double x1, double y1, Cell value) {
        for (int iy = 0; iy < height; ++iy) {
            const double cy = center_y(iy);
            if (cy < y0 || cy > y1) continue;
            for (int ix = 0; ix < width; ++ix) {
                const double cx = center_x(ix);
                if (cx >= x0 && cx <= x1) ref(ix, iy) = value;
            }
        }
    }

    bool operator==(const OccupancyGrid&) const = default;
};

/// Disc collision test: true when the query point is off the map or any cell
/// whose center lies within robot_radius of it (the point's own cell always
/// counts) is Occupied. Off-map cells inside the disc count as Occupied.
inline bool collides(const OccupancyGrid& grid, double wx, double wy, double robot_radius) {
    if (!grid.point_in_bounds(wx, wy)) return true;
    if (grid.at_point(wx, wy) == Cell::Occupied) return true;
    const double r2 = robot_radius * robot_radius;
    const int ix0 = grid.cell_x(wx - robot_radius);
    const int ix1 = grid.cell_x(wx + robot_radius);
    const int iy0 = grid.cell_y(wy - robot_radius);
    const int iy1 = grid.cell_y(wy + robot_radius);
    for (int iy = iy0; iy <= iy1; ++iy) {
        const double dy = grid.center_y(iy) - wy;
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double dx = grid.center_x(ix) - wx;
            if (dx * dx + dy * dy > r2) continue;
            if (grid.at(ix, iy) == Cell::Occupied) return true;
        }
    }
    return false;
}

inline bool collides(const OccupancyGrid& grid, const State& s, double robot_radius) {
    return collides(grid, s.x, s.y, robot_radius);
}

/// Strict free-space test: the point's cell and every cell center within
/// robot_radius must be Free. Unknown cells block, so on a belief grid this
/// only passes where the map has actually been revealed.
inline bool disc_free(const OccupancyGrid& grid, double wx, double wy, double robot_radius) {
    if (grid.at_point(wx, wy) != Cell::Free) return false;
    const double r2 = robot_radius * robot_radius;
    const int ix0 = grid.cell_x(wx - robot_radius);
    const int ix1 = grid.cell_x(wx + robot_radius);
    const int iy0 = grid.cell_y(wy - robot_radius);
    const int iy1 = grid.cell_y(wy + robot_radius);
    for (int iy = iy0; iy <= iy1; ++iy) {
        const double dy = grid.center_y(iy) - wy;
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double dx = grid.center_x(ix) - wx;
            if (dx * dx + dy * dy > r2) continue;
            if (grid.at(ix, iy) != Cell::Free) return false;
        }
    }
    return true;
}

inline bool disc_free(const OccupancyGrid& grid, const State& s, double robot_radius) {
    return disc_free(grid, s.x, s.y, robot_radius);
}

} // namespace cmppi
