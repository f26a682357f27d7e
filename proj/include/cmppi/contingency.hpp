#pragma once

#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmppi/costs.hpp"
#include "cmppi/environment.hpp"
#include "cmppi/mppi.hpp"
#include "cmppi/rng.hpp"

namespace cmppi {

/// Budget and thresholds for the per-state escape search.
struct ContingencyParams {
    int K_c = 64;          // samples per round
    int T_c = 12;          // contingency horizon, steps
    int L_c = 2;           // sampling rounds (round 0 is uniform)
    int T_s = 10;          // number of nominal states checked
    int m_elite = 6;       // cross-entropy elite count
    double eps_safe = 0.0; // reach threshold on the floored distance, m
    CostParams cost;       // lambda/alpha for the importance-correction term
    double sigma_c_v = 0.8;     // proposal variance when the elite fit is unavailable
    double sigma_c_omega = 0.8;
    double sigma_floor = 1e-4;
};

inline void validate(const ContingencyParams& p) {
    if (p.K_c < 1 || p.T_c < 1 || p.L_c < 1 || p.T_s < 1)
        throw std::invalid_argument("contingency budgets must be positive");
    if (p.m_elite < 2 || p.m_elite > p.K_c)
        throw std::invalid_argument("m_elite must be in [2, K_c]");
    if (p.eps_safe < 0.0) throw std::invalid_argument("eps_safe must be non-negative");
}

/// Escape search result for one nominal state. reach_score == 0 certifies
/// that replaying `controls` from that state enters the safe set within T_c
/// steps without leaving strictly-free space.
struct StateContingency {
    double reach_score = kInf;  // 0 or +inf
    ControlSequence controls;   // length T_c, clamped
    double min_distance = kInf; // best floored distance achieved by a valid rollout
};

struct ContingencyResult {
    std::vector<StateContingency> per_state;
    double s_reach = kInf;  // 0 iff every checked state certified
};

namespace detail {

/// Rollout cost of one candidate escape: the smallest floored distance to the
/// safe set over the T_c+1 visited states, or +inf as soon as any state's
/// disc leaves strictly-free space of `occ`.
inline double contingency_rollout_cost(const State& x0, const ControlSequence& seq,
                                       const OccupancyGrid& occ,
                                       std::span<const SafeZone> zones, double dt,
                                       double robot_radius) {
    State s = x0;
    double best = min_dist_to_safe(s.x, s.y, zones);
    for (const auto& u : seq.u) {
        s = step(s, u, dt);
        if (!disc_free(occ, s, robot_radius)) return kInf;
        best = std::min(best, min_dist_to_safe(s.x, s.y, zones));
    }
    return best;
}

/// Escape search from a single state against the given occupancy view
/// (belief grid during planning, ground truth for oracle scoring).
/// quick mode returns at the first certifying sample; the full mode keeps
/// the argmin over every drawn sample, as the module contract states.
inline StateContingency search_contingency(const State& x_i, const OccupancyGrid& occ,
                                           std::span<const SafeZone> zones,
                                           const ContingencyParams& p,
                                           const ControlBounds& bounds, double dt,
                                           double robot_radius, double v_max, RngKey key,
                                           bool quick) {
    const int n = kControlDim * p.T_c;
    StateContingency out;
    out.controls = ControlSequence(p.T_c);

    if (!disc_free(occ, x_i, robot_radius)) return out;  // no valid rollout exists

    const double d0 = min_dist_to_safe(x_i.x, x_i.y, zones);
    out.min_distance = d0;  // standing still is always available here
    if (d0 <= p.eps_safe) {
        out.reach_score = 0.0;
        return out;
    }
    if (d0 > v_max * p.T_c * dt + p.eps_safe) return out;  // kinematically out of reach

    Eigen::VectorXd sigma_init(n);
    for (int t = 0; t < p.T_c; ++t) {
        sigma_init[2 * t] = p.sigma_c_v;
        sigma_init[2 * t + 1] = p.sigma_c_omega;
    }
    SamplingDistribution dist{Eigen::VectorXd::Zero(n), sigma_init};

    SampleBatch batch;
    batch.samples.resize(p.K_c, n);
    batch.noises.resize(p.K_c, n);
    batch.costs.resize(p.K_c);

    const double gamma = p.cost.gamma();
    for (int l = 0; l < p.L_c; ++l) {
        const RngKey round_key = key.child(static_cast<std::uint64_t>(l));
        const Eigen::VectorXd stddev = dist.cov.array().sqrt();
        for (int k = 0; k < p.K_c; ++k) {
            SplitMix64 eng = round_key.child(static_cast<std::uint64_t>(k)).engine();
            Eigen::VectorXd raw(n);
            if (l == 0) {
                std::uniform_real_distribution<double> uv(bounds.lb.v, bounds.ub.v);
                std::uniform_real_distribution<double> uw(bounds.lb.omega, bounds.ub.omega);
                for (int t = 0; t < p.T_c; ++t) {
                    raw[2 * t] = uv(eng);
                    raw[2 * t + 1] = uw(eng);
                }
                batch.noises.row(k) = (raw - dist.mean).transpose();
            } else {
                std::normal_distribution<double> gauss(0.0, 1.0);
                for (int i = 0; i < n; ++i) raw[i] = gauss(eng) * stddev[i];
                batch.noises.row(k) = raw.transpose();
                raw += dist.mean;
            }
            ControlSequence seq = ControlSequence::from_flat(raw).clamped(bounds);
            batch.samples.row(k) = seq.flatten().transpose();

            const double reach_cost =
                contingency_rollout_cost(x_i, seq, occ, zones, dt, robot_radius);
            double total = reach_cost;
            if (l > 0 && std::isfinite(total))
                total += control_cost_term(dist.mean, dist.cov, batch.noises.row(k).transpose(),
                                           batch.samples.row(k).transpose(), gamma);
            batch.costs[k] = total;

            if (reach_cost < out.min_distance) {
                out.min_distance = reach_cost;
                out.controls = seq;
            }
            if (quick && reach_cost <= p.eps_safe) {
                out.reach_score = 0.0;
                return out;
            }
        }
        if (l < p.L_c - 1) {
            const auto next = cem_update(batch, p.m_elite, p.sigma_floor);
            if (next.has_value()) dist = *next;  // otherwise the proposal stays put
        }
    }

    if (out.min_distance <= p.eps_safe) out.reach_score = 0.0;
    return out;
}

/// Runs the per-state searches over the first T_s states of X.
/// early_exit stops at the first uncertified state (the summed score is
/// already +inf); per-state substreams keep the evaluated entries identical
/// either way.
inline ContingencyResult find_plan(std::span<const State> X, const OccupancyGrid& occ,
                                   std::span<const SafeZone> zones, const ContingencyParams& p,
                                   const ControlBounds& bounds, double dt, double robot_radius,
                                   double v_max, RngKey key, bool quick, bool early_exit) {
    validate(p);
    if (static_cast<int>(X.size()) < p.T_s)
        throw std::invalid_argument("state sequence shorter than T_s");
    ContingencyResult result;
    result.per_state.reserve(static_cast<std::size_t>(p.T_s));
    result.s_reach = 0.0;
    for (int i = 0; i < p.T_s; ++i) {
        result.per_state.push_back(search_contingency(X[static_cast<std::size_t>(i)], occ, zones,
                                                      p, bounds, dt, robot_radius, v_max,
                                                      key.child(static_cast<std::uint64_t>(i)),
                                                      quick));
        result.s_reach += result.per_state.back().reach_score;
        if (early_exit && !std::isfinite(result.s_reach)) break;
    }
    return result;
}

} // namespace detail

/// Full escape search along a nominal rollout: for each of the first T_s
/// states, round 0 draws K_c control sequences uniformly over the bounds and
/// seeds a cross-entropy fit; later rounds sample that proposal. A state is
/// certified when the best collision-free rollout's floored distance to the
/// safe set falls within eps_safe. Collision checks run against the belief
/// grid with Unknown treated as blocked, so certificates replay cleanly
/// against ground truth.
inline ContingencyResult find_contingency_plan(std::span<const State> X, const Environment& env,
                                               const ContingencyParams& p,
                                               const ControlBounds& bounds, RngKey key) {
    return detail::find_plan(X, env.known, env.safe_zones, p, bounds, env.dt, env.robot_radius,
                             env.v_max, key, /*quick=*/false, /*early_exit=*/false);
}

/// Ground-truth replay of a stored contingency: true iff the rollout enters
/// a zone-radius + eps_safe ball within T_c steps and every visited state is
/// collision-free in the ground-truth grid.
inline bool verify_certificate(const StateContingency& cert, const State& x_i,
                               const Environment& env, const ContingencyParams& p) {
    if (cert.reach_score != 0.0) return false;
    State s = x_i;
    if (collides(env.grid, s, env.robot_radius)) return false;
    if (min_dist_to_safe(s.x, s.y, env.safe_zones) <= p.eps_safe) return true;
    const int steps = std::min<int>(p.T_c, cert.controls.horizon());
    for (int t = 0; t < steps; ++t) {
        s = step(s, cert.controls.u[static_cast<std::size_t>(t)], env.dt);
        if (collides(env.grid, s, env.robot_radius)) return false;
        if (min_dist_to_safe(s.x, s.y, env.safe_zones) <= p.eps_safe) return true;
    }
    return false;
}

} // namespace cmppi
