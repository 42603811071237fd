#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tailbench/common.hpp"
#include "tailbench/dataio.hpp"
#include "tailbench/rng.hpp"

namespace tailbench {

struct OptimConfig {
    double gamma = 0.01;   // learning rate
    double delta = 0.0;    // ridge regularization
    int B = 1;             // minibatch size (draws with replacement)
    int K = 1000;          // iteration count
    std::uint64_t seed = 0;
    int replicas = 1000;   // ensemble size

    void validate() const {
        if (!(gamma > 0)) throw config_error("OptimConfig: gamma must be > 0");
        if (!(delta >= 0)) throw config_error("OptimConfig: delta must be >= 0");
        if (B < 1) throw config_error("OptimConfig: B must be >= 1");
        if (K < 1) throw config_error("OptimConfig: K must be >= 1");
        if (replicas < 1) throw config_error("OptimConfig: replicas must be >= 1");
    }
};

struct SgdOptions {
    bool record_trajectory = false;
    // Off by default: clipping would censor exactly the tail events under study.
    bool divergence_guard = false;
    double guard_threshold = 1e12;
    // Replaces sampling by the exact full gradient; used for convergence checks.
    bool full_batch = false;
};

struct SgdResult {
    Eigen::VectorXd x_final;
    std::optional<Eigen::MatrixXd> trajectory;  // (K+1) x d when recorded
    bool diverged = false;
    long diverged_at = -1;
};

// Initial-point distribution for ensembles.
struct InitSampler {
    enum class Kind { gaussian, zero, uniform_box };
    Kind kind = Kind::gaussian;
    double scale = 1.0;  // std dev for gaussian, half-width for uniform_box

    Eigen::VectorXd sample(Eigen::Index d, Rng& rng) const;
};

struct Ensemble {
    Eigen::MatrixXd finals;     // replicas x d
    Eigen::VectorXd projected;  // q1^T x_K per replica
    OptimConfig config;
    std::uint64_t dataset_digest = 0;
    std::vector<int> divergent;  // replica indices flagged by the guard
};

struct ProjectedSamples {
    Eigen::VectorXd y;  // raw projections
    Eigen::VectorXd z;  // centered: y - mean(y)
};

// B i.i.d. uniform draws from {0, ..., n-1}, with replacement.
std::vector<int> sample_batch(Eigen::Index n, int B, Rng& rng);

// (1/B) sum_{i in batch} (a_i . x - b_i) a_i + delta x, multiplicity weighted.
Eigen::VectorXd minibatch_gradient(const Dataset& ds, const Eigen::VectorXd& x,
                                   const std::vector<int>& batch, double delta);

SgdResult sgd_run(const Dataset& ds, const OptimConfig& cfg, const Eigen::VectorXd& x0, Rng& rng,
                  const SgdOptions& opts = {});

// Exact gradient-noise covariance
//   C(x) = (1/B) [ (1/n) sum_i grad L_i(x) grad L_i(x)^T - (1/n^2) grad L(x) grad L(x)^T ].
Eigen::MatrixXd gradient_noise_covariance(const Dataset& ds, const Eigen::VectorXd& x, int B);

// R independent SGD runs from i.i.d. initial points. Per-replica seeds are
// derived from cfg.seed with derive_seed, so the result is independent of the
// execution schedule. workers <= 0 resolves to TAILBENCH_WORKERS or the
// hardware concurrency.
Ensemble run_ensemble(const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
                      const InitSampler& init = {}, const SgdOptions& opts = {}, int workers = 0);

ProjectedSamples project_dominant(const Ensemble& ens, const Spectrum& spec);

int resolve_workers(int requested);

}  // namespace tailbench
