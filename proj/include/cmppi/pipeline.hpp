#pragma once

#include <chrono>
#include <fstream>
#include <string>
#include <vector>

#include "cmppi/config.hpp"
#include "cmppi/nmpc.hpp"

namespace cmppi {

/// One executed step: the state the planner acted from, the applied control,
/// the cycle's statistics, and (for contingency variants) the escape
/// certificate for that state.
struct StepRecord {
    int step = 0;
    State state;
    Control control;
    double best_cost = kInf;
    double finite_fraction = 0.0;
    bool certified = false;
    StateContingency certificate;
    double wall_ms = 0.0;
};

struct RunTrace {
    std::vector<StepRecord> steps;
    State final_state;
    bool reached_goal = false;
    bool collided = false;
};

struct CycleResult {
    ControlSequence plan;                        // the sequence execution follows
    std::vector<StateContingency> certificates;  // aligned with the plan's rollout prefix
    double best_cost = kInf;
    double finite_fraction = 0.0;
    int biases_used = 0;
};

namespace detail {

/// Zero-order-hold resampling of an NMPC output onto the planner's horizon.
/// Steps past the NMPC span stay zero (stop at the corridor end).
inline ControlSequence resample_controls(const ControlSequence& seq, double dt_src, int T,
                                         double dt_dst) {
    ControlSequence out(T);
    const double span = dt_src * seq.horizon();
    for (int j = 0; j < T; ++j) {
        const double t = j * dt_dst;
        if (t >= span) break;
        const int idx = std::min(seq.horizon() - 1, static_cast<int>(t / dt_src));
        out.u[static_cast<std::size_t>(j)] = seq.u[static_cast<std::size_t>(idx)];
    }
    return out;
}

/// Roadmap paths -> NMPC ancillary sequences on the planner grid.
inline std::vector<ControlSequence> build_biases(const Environment& env, const State& x,
                                                 const PlannerConfig& cfg,
                                                 const ControlBounds& bounds, RngKey key) {
    const double r_max = reach_radius(env.v_max, cfg.nominal.T_safe, env.dt);
    const OccupancyGrid biased = add_pseudo_obstacles(env.known, env.safe_zones, r_max);
    const auto paths = topo_prm(biased, Eigen::Vector2d(x.x, x.y),
                                Eigen::Vector2d(env.goal_x, env.goal_y), env.safe_zones,
                                cfg.frontend, key);
    std::vector<ControlSequence> biases;
    for (const auto& path : paths) {
        const auto dec =
            convex_decompose(env.known, path, r_max, cfg.frontend.knot_count, env.robot_radius);
        if (!dec.has_value()) continue;
        const double arc = std::min(r_max, path.length());
        NmpcProblem prob;
        prob.x_start = x;
        prob.knots = dec->knots;
        prob.polytopes = dec->polytopes;
        prob.goal = Eigen::Vector2d(env.goal_x, env.goal_y);
        prob.bounds = bounds;
        prob.dt_k = arc / (cfg.frontend.knot_count * cfg.frontend.v_target_frac * env.v_max);
        const auto seq = nmpc_solve(prob, cfg.frontend);
        if (!seq.has_value()) continue;
        biases.push_back(
            resample_controls(*seq, prob.dt_k, cfg.nominal.T, env.dt).clamped(bounds));
        if (static_cast<int>(biases.size()) >= cfg.frontend.max_paths) break;
    }
    return biases;
}

} // namespace detail

/// One planning cycle: seed biases from the roadmap frontend (when enabled),
/// run the nested sampler, then re-certify the averaged mean; if the mean
/// fails re-certification the best certified sample becomes the plan, so the
/// returned certificates always describe the returned plan's own rollout.
inline CycleResult plan_cycle(const Environment& env, const State& x, const ControlSequence& u_prev,
                              const PlannerConfig& cfg, RngKey key) {
    const ControlBounds bounds = cfg.bounds(env);
    std::vector<ControlSequence> biases;
    if (cfg.use_frontend) biases = detail::build_biases(env, x, cfg, bounds, key.child(0));
    if (static_cast<int>(biases.size()) * cfg.nominal.N_a > cfg.nominal.K)
        biases.resize(static_cast<std::size_t>(cfg.nominal.K / std::max(1, cfg.nominal.N_a)));

    const PlanResult plan = nested_mppi(x, u_prev, biases, cfg.nominal.sigma_init(), env,
                                        cfg.nominal, cfg.contingency, bounds, key.child(1));

    CycleResult out;
    out.best_cost = plan.best_cost;
    out.finite_fraction = plan.finite_fraction;
    out.biases_used = static_cast<int>(biases.size());

    if (!cfg.nominal.use_contingency) {
        out.plan = plan.nominal;  // equals u_prev when everything was infeasible
        return out;
    }
    if (!std::isfinite(plan.best_cost)) {
        out.plan = u_prev;
        return out;
    }
    auto mean_certs = recertify(plan.nominal, x, env, cfg.contingency, bounds, key.child(2));
    if (mean_certs.has_value()) {
        out.plan = plan.nominal;
        out.certificates = std::move(*mean_certs);
    } else {
        out.plan = plan.best_sequence;
        out.certificates = plan.contingencies;
    }
    return out;
}

/// Closed-loop episode: reveal -> plan -> execute the first control -> shift.
/// When a cycle is infeasible the previous certified plan keeps being
/// executed (its stored per-state certificates stay valid); after
/// retreat_after consecutive failures the robot follows the stored escape of
/// its current state into the safe set and replans from there.
inline RunTrace run_episode(Environment& env, const PlannerConfig& cfg, RngKey key) {
    const ControlBounds bounds = cfg.bounds(env);
    RunTrace trace;
    State x = env.start;
    ControlSequence u_prev(cfg.nominal.T);
    std::vector<StateContingency> pending_certs;
    std::size_t cursor = 0;
    int infeasible_streak = 0;

    // retreat bookkeeping: remaining escape controls for the current state
    std::vector<Control> retreat;
    std::size_t retreat_pos = 0;

    auto goal_reached = [&](const State& s) {
        return std::hypot(s.x - env.goal_x, s.y - env.goal_y) <= cfg.pipeline.goal_tol;
    };
    auto suffix_certificate = [&](std::size_t from) {
        StateContingency cert;
        cert.reach_score = 0.0;
        cert.min_distance = 0.0;
        cert.controls = ControlSequence(cfg.contingency.T_c);
        for (std::size_t j = from; j < retreat.size(); ++j)
            cert.controls.u[j - from] = retreat[j];
        return cert;
    };

    for (int t = 0; t < cfg.pipeline.max_steps; ++t) {
        reveal(env, x);
        if (goal_reached(x)) {
            trace.reached_goal = true;
            break;
        }

        StepRecord rec;
        rec.step = t;
        rec.state = x;

        if (retreat_pos < retreat.size()) {
            rec.control = retreat[retreat_pos];
            rec.certified = true;
            rec.certificate = suffix_certificate(retreat_pos);
            ++retreat_pos;
            if (retreat_pos == retreat.size()) {  // escape finished inside the safe set
                retreat.clear();
                retreat_pos = 0;
                u_prev = ControlSequence(cfg.nominal.T);
                pending_certs.clear();
                cursor = 0;
                infeasible_streak = 0;
            }
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            const CycleResult cycle =
                plan_cycle(env, x, u_prev, cfg, key.child(static_cast<std::uint64_t>(t)));
            rec.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            rec.best_cost = cycle.best_cost;
            rec.finite_fraction = cycle.finite_fraction;

            if (!cycle.certificates.empty()) {
                pending_certs = cycle.certificates;
                cursor = 0;
                infeasible_streak = 0;
                u_prev = cycle.plan;
            } else if (cfg.nominal.use_contingency) {
                ++infeasible_streak;
            } else {
                u_prev = cycle.plan;  // unconstrained variant keeps tracking its mean
            }

            if (cfg.nominal.use_contingency && cursor < pending_certs.size()) {
                rec.certified = true;
                rec.certificate = pending_certs[cursor];
            }

            const bool want_retreat = cfg.nominal.use_contingency &&
                                      infeasible_streak >= cfg.pipeline.retreat_after &&
                                      rec.certified;
            if (want_retreat) {
                // replay the stored escape up to its first safe-set entry
                retreat.clear();
                retreat_pos = 0;
                State s = x;
                for (const auto& u : rec.certificate.controls.u) {
                    if (min_dist_to_safe(s.x, s.y, env.safe_zones) <= cfg.contingency.eps_safe)
                        break;
                    retreat.push_back(u);
                    s = step(s, u, env.dt);
                }
                if (retreat.empty()) {  // already inside the safe set: hold
                    rec.control = Control{};
                    infeasible_streak = 0;
                } else {
                    rec.control = retreat[0];
                    retreat_pos = 1;
                    if (retreat_pos == retreat.size()) {
                        retreat.clear();
                        retreat_pos = 0;
                        u_prev = ControlSequence(cfg.nominal.T);
                        pending_certs.clear();
                        cursor = 0;
                        infeasible_streak = 0;
                    }
                }
            } else {
                rec.control = u_prev.horizon() > 0 ? u_prev.u.front() : Control{};
                u_prev = u_prev.shifted_left();
                ++cursor;
            }
        }

        x = step(x, rec.control, env.dt);
        trace.steps.push_back(rec);
        if (collides(env.grid, x, env.robot_radius)) {
            trace.collided = true;
            break;
        }
    }

    trace.final_state = x;
    if (!trace.collided && goal_reached(x)) trace.reached_goal = true;
    return trace;
}

/// Replays the recorded controls through the dynamics; true when every
/// transition matches the recorded successor exactly.
inline bool trace_consistent(const RunTrace& trace, double dt) {
    for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        const State next = step(trace.steps[i].state, trace.steps[i].control, dt);
        if (!(next == trace.steps[i + 1].state)) return false;
    }
    if (!trace.steps.empty()) {
        const State last = step(trace.steps.back().state, trace.steps.back().control, dt);
        if (!(last == trace.final_state)) return false;
    }
    return true;
}

inline void save_trace(const RunTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& s : trace.steps) {
        nlohmann::json j{{"step", s.step},
                         {"x", s.state.x},
                         {"y", s.state.y},
                         {"theta", s.state.theta},
                         {"v", s.control.v},
                         {"omega", s.control.omega},
                         {"finite_fraction", s.finite_fraction},
                         {"certified", s.certified},
                         {"wall_ms", s.wall_ms}};
        if (std::isfinite(s.best_cost)) j["best_cost"] = s.best_cost;
        else j["best_cost"] = nullptr;
        out << j.dump() << "\n";
    }
}

} // namespace cmppi
