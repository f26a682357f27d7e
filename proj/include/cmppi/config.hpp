#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cmppi/contingency.hpp"
#include "cmppi/frontend.hpp"
#include "cmppi/nested.hpp"

namespace cmppi {

enum class Variant { Mppi, Base, Mpc, AisMpc };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::Mppi: return "mppi";
        case Variant::Base: return "base";
        case Variant::Mpc: return "mpc";
        case Variant::AisMpc: return "ais-mpc";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "mppi") return Variant::Mppi;
    if (s == "base") return Variant::Base;
    if (s == "mpc") return Variant::Mpc;
    if (s == "ais-mpc") return Variant::AisMpc;
    throw std::invalid_argument("unknown variant: " + s);
}

struct PipelineParams {
    double goal_tol = 0.3;
    int max_steps = 200;
    int retreat_after = 5;  // consecutive infeasible cycles before retreating to safety
};

struct EnvGenParams {
    double width = 12.0;
    double height = 12.0;
    double resolution = 0.1;
    int obstacle_count_min = 5;
    int obstacle_count_max = 9;
    double obstacle_size_min = 0.6;
    double obstacle_size_max = 2.2;
    int zone_count = 10;
    double zone_radius = 0.4;
    double zone_min_gap = 1.0;
    double sensing_radius = 3.0;
    double robot_radius = 0.2;
    double dt = 0.1;
    double v_max = 2.0;
};

/// Full planner configuration; the benchmark variants are derived from one
/// shared instance so every variant sees identical budgets.
struct PlannerConfig {
    NominalParams nominal;
    ContingencyParams contingency;
    FrontendParams frontend;
    PipelineParams pipeline;
    EnvGenParams envgen;
    double omega_max = 2.0;
    bool use_frontend = true;

    ControlBounds bounds(const Environment& env) const {
        return ControlBounds{Control{-env.v_max, -omega_max}, Control{env.v_max, omega_max}};
    }
};

/// Specializes the shared configuration for one benchmark variant:
///   mppi     unconstrained sampler, no seeding
///   base     contingency gate, single-round escape search, no seeding
///   mpc      base plus roadmap/NMPC seeding
///   ais-mpc  mpc plus adaptive (multi-round) escape search
inline PlannerConfig apply_variant(PlannerConfig cfg, Variant v) {
    cfg.contingency.T_s = cfg.nominal.T_safe;
    switch (v) {
        case Variant::Mppi:
            cfg.nominal.use_contingency = false;
            cfg.use_frontend = false;
            break;
        case Variant::Base:
            cfg.nominal.use_contingency = true;
            cfg.use_frontend = false;
            cfg.contingency.L_c = 1;
            break;
        case Variant::Mpc:
            cfg.nominal.use_contingency = true;
            cfg.use_frontend = true;
            cfg.contingency.L_c = 1;
            break;
        case Variant::AisMpc:
            cfg.nominal.use_contingency = true;
            cfg.use_frontend = true;
            cfg.contingency.L_c = std::max(2, cfg.contingency.L_c);
            break;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON (partial configs override defaults key by key)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace detail

inline void config_from_json(const nlohmann::json& j, PlannerConfig& cfg) {
    if (j.contains("nominal")) {
        const auto& n = j.at("nominal");
        detail::read(n, "K", cfg.nominal.K);
        detail::read(n, "T", cfg.nominal.T);
        detail::read(n, "L", cfg.nominal.L);
        detail::read(n, "N_a", cfg.nominal.N_a);
        detail::read(n, "lambda", cfg.nominal.cost.lambda);
        detail::read(n, "alpha", cfg.nominal.cost.alpha);
        detail::read(n, "q_weight", cfg.nominal.q_weight);
        detail::read(n, "T_safe", cfg.nominal.T_safe);
        detail::read(n, "sigma_v", cfg.nominal.sigma_v);
        detail::read(n, "sigma_omega", cfg.nominal.sigma_omega);
        detail::read(n, "sigma_floor", cfg.nominal.sigma_floor);
        detail::read(n, "m_elite", cfg.nominal.m_elite);
    }
    if (j.contains("contingency")) {
        const auto& c = j.at("contingency");
        detail::read(c, "K_c", cfg.contingency.K_c);
        detail::read(c, "T_c", cfg.contingency.T_c);
        detail::read(c, "L_c", cfg.contingency.L_c);
        detail::read(c, "m_elite", cfg.contingency.m_elite);
        detail::read(c, "eps_safe", cfg.contingency.eps_safe);
        detail::read(c, "lambda", cfg.contingency.cost.lambda);
        detail::read(c, "alpha", cfg.contingency.cost.alpha);
        detail::read(c, "sigma_c_v", cfg.contingency.sigma_c_v);
        detail::read(c, "sigma_c_omega", cfg.contingency.sigma_c_omega);
        detail::read(c, "sigma_floor", cfg.contingency.sigma_floor);
    }
    if (j.contains("frontend")) {
        const auto& f = j.at("frontend");
        detail::read(f, "p_safe", cfg.frontend.p_safe);
        detail::read(f, "max_paths", cfg.frontend.max_paths);
        detail::read(f, "knot_count", cfg.frontend.knot_count);
        detail::read(f, "prm_samples", cfg.frontend.prm_samples);
        detail::read(f, "knn", cfg.frontend.knn);
        detail::read(f, "connect_radius", cfg.frontend.connect_radius);
        detail::read(f, "v_target_frac", cfg.frontend.v_target_frac);
        detail::read(f, "tol_con", cfg.frontend.tol_con);
        detail::read(f, "nmpc_max_outer", cfg.frontend.nmpc_max_outer);
        detail::read(f, "nmpc_max_inner", cfg.frontend.nmpc_max_inner);
    }
    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        detail::read(p, "goal_tol", cfg.pipeline.goal_tol);
        detail::read(p, "max_steps", cfg.pipeline.max_steps);
        detail::read(p, "retreat_after", cfg.pipeline.retreat_after);
    }
    if (j.contains("envgen")) {
        const auto& e = j.at("envgen");
        detail::read(e, "width", cfg.envgen.width);
        detail::read(e, "height", cfg.envgen.height);
        detail::read(e, "resolution", cfg.envgen.resolution);
        detail::read(e, "obstacle_count_min", cfg.envgen.obstacle_count_min);
        detail::read(e, "obstacle_count_max", cfg.envgen.obstacle_count_max);
        detail::read(e, "obstacle_size_min", cfg.envgen.obstacle_size_min);
        detail::read(e, "obstacle_size_max", cfg.envgen.obstacle_size_max);
        detail::read(e, "zone_count", cfg.envgen.zone_count);
        detail::read(e, "zone_radius", cfg.envgen.zone_radius);
        detail::read(e, "zone_min_gap", cfg.envgen.zone_min_gap);
        detail::read(e, "sensing_radius", cfg.envgen.sensing_radius);
        detail::read(e, "robot_radius", cfg.envgen.robot_radius);
        detail::read(e, "dt", cfg.envgen.dt);
        detail::read(e, "v_max", cfg.envgen.v_max);
    }
    detail::read(j, "omega_max", cfg.omega_max);
    cfg.contingency.T_s = cfg.nominal.T_safe;
}

inline PlannerConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    PlannerConfig cfg;
    config_from_json(j, cfg);
    return cfg;
}

} // namespace cmppi
