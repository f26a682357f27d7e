#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace cmppi {

/// Wraps an angle to [-pi, pi).
inline double wrap_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
}

/// Planar differential-drive state.
struct State {
    double x = 0.0;      // m
    double y = 0.0;      // m
    double theta = 0.0;  // rad, kept in [-pi, pi)

    bool operator==(const State&) const = default;
};

/// One control step: linear speed and angular rate.
struct Control {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s

    bool operator==(const Control&) const = default;
};

inline constexpr int kControlDim = 2;

struct ControlBounds {
    Control lb{-2.0, -2.0};
    Control ub{2.0, 2.0};

    Control clamp(Control u) const {
        u.v = std::min(std::max(u.v, lb.v), ub.v);
        u.omega = std::min(std::max(u.omega, lb.omega), ub.omega);
        return u;
    }

    bool contains(const Control& u) const {
        return u.v >= lb.v && u.v <= ub.v && u.omega >= lb.omega && u.omega <= ub.omega;
    }
};

/// Control trajectory over a fixed horizon. flatten() lays controls out as
/// [v0, w0, v1, w1, ...] which is the vector the samplers operate on.
struct ControlSequence {
    std::vector<Control> u;

    ControlSequence() = default;
    explicit ControlSequence(int horizon) : u(static_cast<std::size_t>(horizon)) {}

    int horizon() const { return static_cast<int>(u.size()); }

    Eigen::VectorXd flatten() const {
        Eigen::VectorXd out(kControlDim * horizon());
        for (int t = 0; t < horizon(); ++t) {
            out[2 * t] = u[static_cast<std::size_t>(t)].v;
            out[2 * t + 1] = u[static_cast<std::size_t>(t)].omega;
        }
        return out;
    }

    static ControlSequence from_flat(const Eigen::VectorXd& flat) {
        if (flat.size() % kControlDim != 0)
            throw std::invalid_argument("flat control vector length must be a multiple of 2");
        ControlSequence seq(static_cast<int>(flat.size()) / kControlDim);
        for (int t = 0; t < seq.horizon(); ++t)
            seq.u[static_cast<std::size_t>(t)] = Control{flat[2 * t], flat[2 * t + 1]};
        return seq;
    }

    ControlSequence clamped(const ControlBounds& b) const {
        ControlSequence out = *this;
        for (auto& c : out.u) c = b.clamp(c);
        return out;
    }

    /// Receding-horizon shift: drop the first control, zero-pad the tail.
    ControlSequence shifted_left() const {
        ControlSequence out(horizon());
        for (int t = 0; t + 1 < horizon(); ++t) out.u[static_cast<std::size_t>(t)] = u[static_cast<std::size_t>(t) + 1];
        if (horizon() > 0) out.u.back() = Control{};
        return out;
    }

    bool operator==(const ControlSequence&) const = default;
};

/// Explicit Euler step of the differential drive.
inline State step(const State& s, const Control& u, double dt) {
    State n;
    n.x = s.x + u.v * std::cos(s.theta) * dt;
    n.y = s.y + u.v * std::sin(s.theta) * dt;
    n.theta = wrap_angle(s.theta + u.omega * dt);
    return n;
}

/// Rolls the control sequence out from x0. Returns horizon+1 states, the
/// first one being x0 itself.
inline std::vector<State> rollout(const State& x0, const ControlSequence& seq, double dt) {
    std::vector<State> states;
    states.reserve(static_cast<std::size_t>(seq.horizon()) + 1);
    states.push_back(x0);
    for (const auto& u : seq.u) states.push_back(step(states.back(), u, dt));
    return states;
}

} // namespace cmppi
