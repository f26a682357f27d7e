#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmppi/contingency.hpp"
#include "cmppi/costs.hpp"
#include "cmppi/mppi.hpp"

namespace cmppi {

/// Nominal sampler configuration.
struct NominalParams {
    int K = 128;  // samples per round
    int T = 20;   // nominal horizon
    int L = 2;    // sampling rounds
    int N_a = 8;  // samples drawn around each bias mode per round
    CostParams cost;
    double q_weight = 1.0;  // goal cost is q_weight * I over positions
    int T_safe = 10;        // known-space / contingency prefix length
    double sigma_v = 0.5;   // initial proposal variance per coordinate
    double sigma_omega = 0.8;
    double sigma_floor = 1e-4;
    int m_elite = 12;
    bool use_contingency = true;  // off reproduces the unconstrained sampler

    Eigen::Matrix2d goal_weight() const { return q_weight * Eigen::Matrix2d::Identity(); }

    Eigen::VectorXd sigma_init() const {
        Eigen::VectorXd s(kControlDim * T);
        for (int t = 0; t < T; ++t) {
            s[2 * t] = sigma_v;
            s[2 * t + 1] = sigma_omega;
        }
        return s;
    }
};

inline void validate(const NominalParams& p) {
    if (p.K < 1 || p.T < 1 || p.L < 1 || p.N_a < 0)
        throw std::invalid_argument("nominal budgets must be positive");
    if (p.m_elite < 2 || p.m_elite > p.K) throw std::invalid_argument("m_elite must be in [2, K]");
    if (p.T_safe < 1 || p.T_safe > p.T + 1)
        throw std::invalid_argument("T_safe must be in [1, T+1]");
}

struct RoundStats {
    int finite_count = 0;
    int bias_count = 0;
    double best_cost = kInf;
};

/// Output of one planning invocation. `nominal` is the updated proposal
/// mean; `best_sequence` is the lowest-cost certified sample, whose escape
/// certificates are carried in `contingencies` (one per checked prefix
/// state). best_cost < +inf implies every certificate has reach score 0.
struct PlanResult {
    ControlSequence nominal;
    ControlSequence best_sequence;
    std::vector<StateContingency> contingencies;
    double best_cost = kInf;
    double finite_fraction = 0.0;
    std::vector<RoundStats> rounds;
};

using TerminalCost = std::function<double(const State&)>;

namespace detail {

struct SampleEval {
    double cost = kInf;
    std::vector<StateContingency> certificates;
};

/// State-dependent cost of a clamped control sample: goal tracking plus the
/// hard known-space, collision, and contingency-existence gates. The
/// importance-correction term is the caller's job (it needs the noise).
inline SampleEval evaluate(const ControlSequence& seq, const State& x0, const Environment& env,
                           const NominalParams& np, const ContingencyParams& cp,
                           const ControlBounds& bounds, RngKey key, bool quick,
                           const TerminalCost& terminal_cost) {
    SampleEval out;
    const auto states = rollout(x0, seq, env.dt);

    double gate = known_space_cost(states, env.known, np.T_safe);
    if (gate == 0.0) {
        for (const auto& s : states) {
            if (collides(env.known, s, env.robot_radius)) {
                gate = kInf;
                break;
            }
        }
    }
    if (!std::isfinite(gate)) {
        out.cost = kInf;
        return out;
    }

    if (np.use_contingency) {
        auto cont = detail::find_plan(states, env.known, env.safe_zones, cp, bounds, env.dt,
                                      env.robot_radius, env.v_max, key, quick,
                                      /*early_exit=*/quick);
        if (!std::isfinite(cont.s_reach)) {
            out.cost = kInf;
            return out;
        }
        out.certificates = std::move(cont.per_state);
    }

    const std::span<const State> running(states.data(), static_cast<std::size_t>(np.T));
    out.cost = nominal_cost(running, Eigen::Vector2d(env.goal_x, env.goal_y), np.goal_weight());
    if (terminal_cost) out.cost += terminal_cost(states.back());
    return out;
}

} // namespace detail

/// Per-sample cost as the planner composes it, with the full (non-early-exit)
/// escape search so the returned certificates cover every prefix state.
inline std::pair<double, std::vector<StateContingency>> evaluate_sample(
    const ControlSequence& seq, const State& x0, const Environment& env, const NominalParams& np,
    const ContingencyParams& cp, const ControlBounds& bounds, RngKey key,
    const TerminalCost& terminal_cost = {}) {
    const auto states = rollout(x0, seq, env.dt);

    double cost = known_space_cost(states, env.known, np.T_safe);
    for (const auto& s : states)
        cost += penalty(!collides(env.known, s, env.robot_radius));

    std::vector<StateContingency> certs;
    if (np.use_contingency) {
        auto cont = detail::find_plan(states, env.known, env.safe_zones, cp, bounds, env.dt,
                                      env.robot_radius, env.v_max, key, /*quick=*/false,
                                      /*early_exit=*/false);
        cost += cont.s_reach;
        certs = std::move(cont.per_state);
    }

    const std::span<const State> running(states.data(), static_cast<std::size_t>(np.T));
    cost += nominal_cost(running, Eigen::Vector2d(env.goal_x, env.goal_y), np.goal_weight());
    if (terminal_cost) cost += terminal_cost(states.back());
    return {cost, std::move(certs)};
}

/// Nested sampler: L rounds of K rollouts, each sample's cost gated by the
/// existence of escapes along its prefix. Bias sequences act as extra
/// Gaussian mixture modes: every round draws N_a samples around each bias
/// and the remaining K - B*N_a around the running mean. Cross-entropy refits
/// the proposal between rounds; the final round's weighted average becomes
/// the returned mean. A round where every sample is infeasible leaves the
/// proposal untouched.
inline PlanResult nested_mppi(const State& x0, const ControlSequence& u_init,
                              const std::vector<ControlSequence>& biases,
                              const Eigen::VectorXd& sigma_init, const Environment& env,
                              const NominalParams& np, const ContingencyParams& cp,
                              const ControlBounds& bounds, RngKey key,
                              const TerminalCost& terminal_cost = {}) {
    validate(np);
    if (np.use_contingency) {
        validate(cp);
        if (cp.T_s != np.T_safe)
            throw std::invalid_argument("contingency T_s must equal the nominal T_safe");
    }
    const int n = kControlDim * np.T;
    if (u_init.horizon() != np.T) throw std::invalid_argument("u_init horizon mismatch");
    if (sigma_init.size() != n) throw std::invalid_argument("sigma_init dimension mismatch");
    const int B = static_cast<int>(biases.size());
    if (B * np.N_a > np.K)
        throw std::invalid_argument("bias samples exceed the per-round budget");
    for (const auto& b : biases)
        if (b.horizon() != np.T) throw std::invalid_argument("bias horizon mismatch");

    SamplingDistribution dist{u_init.flatten(), sigma_init.cwiseMax(np.sigma_floor)};
    std::vector<Eigen::VectorXd> bias_means;
    bias_means.reserve(static_cast<std::size_t>(B));
    for (const auto& b : biases) bias_means.push_back(b.flatten());

    PlanResult result;
    result.rounds.reserve(static_cast<std::size_t>(np.L));
    const double gamma = np.cost.gamma();

    SampleBatch batch;
    batch.samples.resize(np.K, n);
    batch.noises.resize(np.K, n);
    batch.costs.resize(np.K);

    for (int l = 0; l < np.L; ++l) {
        const RngKey round_key = key.child(static_cast<std::uint64_t>(l));
        const Eigen::VectorXd stddev = dist.cov.array().sqrt();
        const int n_mean = np.K - B * np.N_a;
        RoundStats stats;

        for (int k = 0; k < np.K; ++k) {
            const RngKey sample_key = round_key.child(static_cast<std::uint64_t>(k));
            SplitMix64 eng = sample_key.child(0).engine();
            std::normal_distribution<double> gauss(0.0, 1.0);
            Eigen::VectorXd noise(n);
            for (int i = 0; i < n; ++i) noise[i] = gauss(eng) * stddev[i];
            const bool from_bias = k >= n_mean;
            const Eigen::VectorXd& center =
                from_bias ? bias_means[static_cast<std::size_t>((k - n_mean) / np.N_a)] : dist.mean;
            if (from_bias) ++stats.bias_count;

            ControlSequence seq = ControlSequence::from_flat(center + noise).clamped(bounds);
            batch.noises.row(k) = noise.transpose();
            batch.samples.row(k) = seq.flatten().transpose();

            auto eval = detail::evaluate(seq, x0, env, np, cp, bounds, sample_key.child(1),
                                         /*quick=*/true, terminal_cost);
            double total = eval.cost;
            if (std::isfinite(total)) {
                total += control_cost_term(dist.mean, dist.cov, batch.noises.row(k).transpose(),
                                           batch.samples.row(k).transpose(), gamma);
                ++stats.finite_count;
            }
            batch.costs[k] = total;
            stats.best_cost = std::min(stats.best_cost, total);

            if (total < result.best_cost) {
                result.best_cost = total;
                result.best_sequence = seq;
                result.contingencies = std::move(eval.certificates);
            }
        }
        result.rounds.push_back(stats);

        if (l < np.L - 1) {
            const auto next = cem_update(batch, np.m_elite, np.sigma_floor);
            if (next.has_value()) dist = *next;
        } else {
            const auto w = weights(batch.costs, np.cost.lambda);
            if (w.has_value()) dist.mean = update_mean(dist, batch, *w);
        }
    }

    result.finite_fraction =
        static_cast<double>(result.rounds.back().finite_count) / static_cast<double>(np.K);
    result.nominal = std::isfinite(result.best_cost)
                         ? ControlSequence::from_flat(dist.mean).clamped(bounds)
                         : u_init;
    return result;
}

/// Escape search along the zero-noise rollout of a candidate plan; returns
/// the per-state certificates when every prefix state certifies.
inline std::optional<std::vector<StateContingency>> recertify(
    const ControlSequence& plan, const State& x0, const Environment& env,
    const ContingencyParams& cp, const ControlBounds& bounds, RngKey key) {
    const auto states = rollout(x0, plan, env.dt);
    auto cont = detail::find_plan(states, env.known, env.safe_zones, cp, bounds, env.dt,
                                  env.robot_radius, env.v_max, key, /*quick=*/true,
                                  /*early_exit=*/true);
    if (!std::isfinite(cont.s_reach)) return std::nullopt;
    return std::move(cont.per_state);
}

} // namespace cmppi
