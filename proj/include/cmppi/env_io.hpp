#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "cmppi/environment.hpp"

namespace cmppi {

/// Environment file schema (JSON):
///   resolution, origin [x,y], size [w,h] (cells),
///   occupied_rects [[x0,y0,x1,y1], ...] and/or occupied_cells [[ix,iy], ...],
///   safe_zones [{x,y,r}], start {x,y,theta}, goal {x,y},
///   sensing_radius, robot_radius, dt, v_max.
/// save always emits the explicit cell list so load(save(env)) == env.
inline nlohmann::json environment_to_json(const Environment& env) {
    nlohmann::json j;
    j["resolution"] = env.grid.resolution;
    j["origin"] = {env.grid.origin_x, env.grid.origin_y};
    j["size"] = {env.grid.width, env.grid.height};
    nlohmann::json cells = nlohmann::json::array();
    for (int iy = 0; iy < env.grid.height; ++iy)
        for (int ix = 0; ix < env.grid.width; ++ix)
            if (env.grid.at(ix, iy) == Cell::Occupied) cells.push_back({ix, iy});
    j["occupied_cells"] = std::move(cells);
    nlohmann::json zones = nlohmann::json::array();
    for (const auto& z : env.safe_zones) zones.push_back({{"x", z.x}, {"y", z.y}, {"r", z.r}});
    j["safe_zones"] = std::move(zones);
    j["start"] = {{"x", env.start.x}, {"y", env.start.y}, {"theta", env.start.theta}};
    j["goal"] = {{"x", env.goal_x}, {"y", env.goal_y}};
    j["sensing_radius"] = env.sensing_radius;
    j["robot_radius"] = env.robot_radius;
    j["dt"] = env.dt;
    j["v_max"] = env.v_max;
    return j;
}

inline Environment environment_from_json(const nlohmann::json& j) {
    const double resolution = j.at("resolution").get<double>();
    const double ox = j.at("origin").at(0).get<double>();
    const double oy = j.at("origin").at(1).get<double>();
    const int w = j.at("size").at(0).get<int>();
    const int h = j.at("size").at(1).get<int>();
    OccupancyGrid grid = OccupancyGrid::filled(w, h, Cell::Free, resolution, ox, oy);
    if (j.contains("occupied_rects"))
        for (const auto& r : j.at("occupied_rects"))
            grid.fill_rect(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                           r.at(3).get<double>(), Cell::Occupied);
    if (j.contains("occupied_cells"))
        for (const auto& c : j.at("occupied_cells"))
            grid.ref(c.at(0).get<int>(), c.at(1).get<int>()) = Cell::Occupied;

    std::vector<SafeZone> zones;
    for (const auto& z : j.at("safe_zones"))
        zones.push_back(SafeZone{z.at("x").get<double>(), z.at("y").get<double>(), z.at("r").get<double>()});

    State start{j.at("start").at("x").get<double>(), j.at("start").at("y").get<double>(),
                j.at("start").at("theta").get<double>()};

    Environment env = make_environment(
        std::move(grid), std::move(zones), start, j.at("goal").at("x").get<double>(),
        j.at("goal").at("y").get<double>(), j.at("sensing_radius").get<double>(),
        j.at("robot_radius").get<double>(), j.at("dt").get<double>(), j.at("v_max").get<double>());
    validate_environment(env);
    return env;
}

inline void save_environment(const Environment& env, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << environment_to_json(env).dump(2) << "\n";
}

inline Environment load_environment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return environment_from_json(j);
}

} // namespace cmppi
