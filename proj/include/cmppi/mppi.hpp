#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cmppi/costs.hpp"
#include "cmppi/rng.hpp"

namespace cmppi {

/// Gaussian proposal over flattened control trajectories. Covariance is kept
/// diagonal; every entry must stay at or above the configured floor.
struct SamplingDistribution {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov;  // diagonal entries

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Inverse temperature and control-cost mixing. gamma = lambda * (1 - alpha)
/// is derived, never stored, so the relation cannot drift.
struct CostParams {
    double lambda = 1.0;
    double alpha = 0.9;

    double gamma() const { return lambda * (1.0 - alpha); }
};

/// One round of perturbed control trajectories with their costs.
/// samples.row(k) is the (clamped) trajectory V_k, noises.row(k) the raw
/// perturbation E_k drawn before clamping.
struct SampleBatch {
    Eigen::MatrixXd samples;  // K x dim
    Eigen::MatrixXd noises;   // K x dim
    Eigen::VectorXd costs;    // K, extended reals

    int size() const { return static_cast<int>(samples.rows()); }
    int dim() const { return static_cast<int>(samples.cols()); }
};

inline void check_distribution(const SamplingDistribution& dist, double sigma_floor) {
    if (dist.mean.size() != dist.cov.size())
        throw std::invalid_argument("mean/covariance dimension mismatch");
    if (sigma_floor <= 0.0) throw std::invalid_argument("sigma_floor must be positive");
    if ((dist.cov.array() < sigma_floor).any())
        throw std::invalid_argument("covariance entry below sigma_floor");
}

/// Draws K Gaussian perturbations about the mean. Sample k consumes only the
/// substream key.child(k), so batches are reproducible and independent of
/// evaluation order or batch size.
inline SampleBatch sample(const SamplingDistribution& dist, int K, RngKey key,
                          double sigma_floor = 1e-4) {
    if (K < 1) throw std::invalid_argument("need at least one sample");
    check_distribution(dist, sigma_floor);
    const int n = dist.dim();
    const Eigen::VectorXd stddev = dist.cov.array().sqrt();
    SampleBatch batch;
    batch.samples.resize(K, n);
    batch.noises.resize(K, n);
    batch.costs = Eigen::VectorXd::Constant(K, kInf);
    for (int k = 0; k < K; ++k) {
        SplitMix64 eng = key.child(static_cast<std::uint64_t>(k)).engine();
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            const double e = gauss(eng) * stddev[i];
            batch.noises(k, i) = e;
            batch.samples(k, i) = dist.mean[i] + e;
        }
    }
    return batch;
}

/// Exponential importance weights with min-cost baseline shift:
/// w_k ∝ exp(-(S_k - min S)/lambda). Infinite costs get exact zero weight.
/// Returns nullopt when every cost is infinite (the caller must keep its
/// proposal mean unchanged in that case).
inline std::optional<Eigen::VectorXd> weights(const Eigen::VectorXd& costs, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
    double rho = kInf;
    for (int k = 0; k < costs.size(); ++k)
        if (std::isfinite(costs[k])) rho = std::min(rho, costs[k]);
    if (!std::isfinite(rho)) return std::nullopt;
    Eigen::VectorXd w(costs.size());
    double eta = 0.0;
    for (int k = 0; k < costs.size(); ++k) {
        w[k] = std::isfinite(costs[k]) ? std::exp(-(costs[k] - rho) / lambda) : 0.0;
        eta += w[k];
    }
    w /= eta;
    return w;
}

/// Importance-correction term added to a sampled cost:
///   gamma * U_prev^T Sigma^{-1} (E_k + U_prev - U_sampled).
/// Vanishes for gamma == 0 and for a zero previous mean.
inline double control_cost_term(const Eigen::VectorXd& u_prev, const Eigen::VectorXd& sigma,
                                const Eigen::VectorXd& noise, const Eigen::VectorXd& u_sampled,
                                double gamma) {
    if (u_prev.size() != sigma.size() || u_prev.size() != noise.size() ||
        u_prev.size() != u_sampled.size())
        throw std::invalid_argument("control_cost_term dimension mismatch");
    if (gamma == 0.0) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < u_prev.size(); ++i)
        acc += u_prev[i] / sigma[i] * (noise[i] + u_prev[i] - u_sampled[i]);
    return gamma * acc;
}

/// Weighted-average update: new mean = old mean + sum_k w_k (V_k - old mean),
/// algebraically sum_k w_k V_k when the weights are normalized.
inline Eigen::VectorXd update_mean(const SamplingDistribution& dist, const SampleBatch& batch,
                                   const Eigen::VectorXd& w) {
    Eigen::VectorXd mean = dist.mean;
    for (int k = 0; k < batch.size(); ++k)
        if (w[k] != 0.0) mean += w[k] * (batch.samples.row(k).transpose() - dist.mean);
    return mean;
}

/// Cross-entropy refit: mean/variance of the m_elite lowest-cost samples,
/// ties broken by lower sample index, variance floored at sigma_floor.
/// Falls back to all finite samples when fewer than m_elite are finite;
/// returns nullopt when fewer than 2 finite samples exist.
inline std::optional<SamplingDistribution> cem_update(const SampleBatch& batch, int m_elite,
                                                      double sigma_floor = 1e-4) {
    if (m_elite < 2) throw std::invalid_argument("m_elite must be at least 2");
    if (m_elite > batch.size()) throw std::invalid_argument("m_elite exceeds batch size");
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(batch.size()));
    for (int k = 0; k < batch.size(); ++k)
        if (std::isfinite(batch.costs[k])) idx.push_back(k);
    if (static_cast<int>(idx.size()) < 2) return std::nullopt;
    const int m = std::min<int>(m_elite, static_cast<int>(idx.size()));
    std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](int a, int b) {
        if (batch.costs[a] != batch.costs[b]) return batch.costs[a] < batch.costs[b];
        return a < b;
    });
    const int n = batch.dim();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < m; ++j) mean += batch.samples.row(idx[static_cast<std::size_t>(j)]).transpose();
    mean /= m;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd d = batch.samples.row(idx[static_cast<std::size_t>(j)]).transpose() - mean;
        var += d.cwiseProduct(d);
    }
    var /= m;
    var = var.cwiseMax(sigma_floor);
    return SamplingDistribution{std::move(mean), std::move(var)};
}

} // namespace cmppi
