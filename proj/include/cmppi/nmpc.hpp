#pragma once

#include <optional>
#include <vector>

#include "cmppi/decomp.hpp"

namespace cmppi {

/// Knot-point shooting problem over M-1 steps: drive from x_start toward
/// goal while state i stays inside polytopes[i] (the start state is pinned,
/// so polytopes[0] is never enforced).
struct NmpcProblem {
    State x_start;
    std::vector<Eigen::Vector2d> knots;  // M, only sizes the horizon
    std::vector<Polytope> polytopes;     // M, aligned with the knots
    Eigen::Vector2d goal;
    ControlBounds bounds;
    double dt_k = 0.1;
};

/// Objective the solver minimizes: sum over knot states (the start excluded)
/// of the distance to the goal. Exposed so callers can compare candidate
/// sequences under the same metric.
inline double nmpc_objective(std::span<const State> states, const Eigen::Vector2d& goal) {
    constexpr double eps2 = 1e-12;
    double total = 0.0;
    for (std::size_t i = 1; i < states.size(); ++i) {
        const double dx = states[i].x - goal[0], dy = states[i].y - goal[1];
        total += std::sqrt(dx * dx + dy * dy + eps2);
    }
    return total;
}

namespace detail {

struct NmpcWork {
    std::vector<State> states;
    std::vector<Eigen::Vector2d> grad;  // d(cost)/du_i
};

/// Objective + quadratic penalty on delta-tightened polytope violations,
/// with the analytic gradient back-propagated through the Euler chain.
inline double nmpc_eval(const NmpcProblem& prob, const std::vector<Control>& u, double mu,
                        double delta, NmpcWork& work, bool want_grad) {
    const int n = static_cast<int>(u.size());
    work.states.assign(1, prob.x_start);
    for (int i = 0; i < n; ++i) work.states.push_back(step(work.states.back(), u[static_cast<std::size_t>(i)], prob.dt_k));

    constexpr double eps2 = 1e-12;
    double total = 0.0;
    std::vector<Eigen::Vector2d> g_pos(static_cast<std::size_t>(n) + 1, Eigen::Vector2d::Zero());
    for (int i = 1; i <= n; ++i) {
        const State& s = work.states[static_cast<std::size_t>(i)];
        const Eigen::Vector2d p(s.x, s.y);
        const Eigen::Vector2d e = p - prob.goal;
        const double d = std::sqrt(e.squaredNorm() + eps2);
        total += d;
        if (want_grad) g_pos[static_cast<std::size_t>(i)] += e / d;

        const Polytope& poly = prob.polytopes[static_cast<std::size_t>(i)];
        const Eigen::VectorXd viol = poly.A * p - (poly.b.array() - delta).matrix();
        for (int r = 0; r < viol.size(); ++r) {
            if (viol[r] <= 0.0) continue;
            total += mu * viol[r] * viol[r];
            if (want_grad) g_pos[static_cast<std::size_t>(i)] += 2.0 * mu * viol[r] * poly.A.row(r).transpose();
        }
    }

    if (want_grad) {
        work.grad.assign(static_cast<std::size_t>(n), Eigen::Vector2d::Zero());
        Eigen::Vector3d lambda = Eigen::Vector3d::Zero();  // adjoint of x_{i+1}
        for (int i = n - 1; i >= 0; --i) {
            lambda[0] += g_pos[static_cast<std::size_t>(i) + 1][0];
            lambda[1] += g_pos[static_cast<std::size_t>(i) + 1][1];
            const State& s = work.states[static_cast<std::size_t>(i)];
            const Control& ui = u[static_cast<std::size_t>(i)];
            const double c = std::cos(s.theta), sn = std::sin(s.theta);
            work.grad[static_cast<std::size_t>(i)] =
                Eigen::Vector2d(prob.dt_k * (c * lambda[0] + sn * lambda[1]), prob.dt_k * lambda[2]);
            // pull the adjoint through x_{i+1} = f(x_i, u_i)
            const double dtheta = prob.dt_k * ui.v * (-sn * lambda[0] + c * lambda[1]);
            lambda = Eigen::Vector3d(lambda[0], lambda[1], lambda[2] + dtheta);
        }
    }
    return total;
}

} // namespace detail

/// Projected-gradient shooting solver with penalty escalation. Returns a
/// bounded control sequence whose rollout keeps every knot state inside its
/// polytope (checked against the untightened constraints before returning),
/// or nullopt when the iteration budget runs out without a feasible answer.
inline std::optional<ControlSequence> nmpc_solve(const NmpcProblem& prob, const FrontendParams& fp) {
    if (prob.polytopes.size() != prob.knots.size())
        throw std::invalid_argument("one polytope per knot expected");
    const int n = static_cast<int>(prob.knots.size()) - 1;
    if (n < 1) return std::nullopt;
    constexpr double delta = 1e-3;  // constraint tightening buffer

    std::vector<Control> u(static_cast<std::size_t>(n), Control{0.0, 0.0});
    detail::NmpcWork work;

    double mu = 10.0;
    for (int outer = 0; outer < fp.nmpc_max_outer; ++outer) {
        double f = detail::nmpc_eval(prob, u, mu, delta, work, true);
        double lr = 0.5;
        for (int inner = 0; inner < fp.nmpc_max_inner; ++inner) {
            double gnorm2 = 0.0;
            for (const auto& g : work.grad) gnorm2 += g.squaredNorm();
            if (gnorm2 < 1e-14) break;

            std::vector<Control> cand(u);
            bool improved = false;
            for (int bt = 0; bt < 12; ++bt) {
                for (int i = 0; i < n; ++i) {
                    cand[static_cast<std::size_t>(i)] = prob.bounds.clamp(
                        Control{u[static_cast<std::size_t>(i)].v - lr * work.grad[static_cast<std::size_t>(i)][0],
                                u[static_cast<std::size_t>(i)].omega - lr * work.grad[static_cast<std::size_t>(i)][1]});
                }
                const double fc = detail::nmpc_eval(prob, cand, mu, delta, work, false);
                if (fc < f - 1e-12) {
                    improved = true;
                    u = cand;
                    f = fc;
                    lr = std::min(lr * 1.6, 2.0);
                    break;
                }
                lr *= 0.35;
            }
            if (!improved) break;
            detail::nmpc_eval(prob, u, mu, delta, work, true);
        }

        // measure the worst untightened violation at the knots
        double worst = -kInf;
        detail::nmpc_eval(prob, u, 0.0, 0.0, work, false);
        for (int i = 1; i <= n; ++i) {
            const State& s = work.states[static_cast<std::size_t>(i)];
            worst = std::max(worst, -prob.polytopes[static_cast<std::size_t>(i)].margin(
                                        Eigen::Vector2d(s.x, s.y)));
        }
        if (worst <= -0.5 * delta) break;  // satisfied with margin; stop escalating
        mu *= 10.0;
    }

    // final acceptance: strict feasibility of the returned sequence
    detail::nmpc_eval(prob, u, 0.0, 0.0, work, false);
    for (int i = 1; i <= n; ++i) {
        const State& s = work.states[static_cast<std::size_t>(i)];
        if (!prob.polytopes[static_cast<std::size_t>(i)].contains(Eigen::Vector2d(s.x, s.y)))
            return std::nullopt;
    }
    for (const auto& ui : u)
        if (!prob.bounds.contains(ui)) return std::nullopt;
    ControlSequence out;
    out.u = std::move(u);
    return out;
}

} // namespace cmppi
