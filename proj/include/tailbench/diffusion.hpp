#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tailbench/common.hpp"
#include "tailbench/dataio.hpp"
#include "tailbench/sgd.hpp"

namespace tailbench {

// Per-coordinate parameters of the rescaled system
//   dZ_i = -theta_i (Z_i - mu_i) dt + sqrt(2 theta_i a_i (|Z|^2 + 1)) dB_i
// and of the decoupled comparison diffusions with |Z|^2 replaced by Z_i^2.
struct PearsonParams {
    Eigen::VectorXd theta;  // mean-reversion rates, > 0
    Eigen::VectorXd mu;     // drift targets
    Eigen::VectorXd a;      // diffusion shape, > 0
    Eigen::VectorXd nu;     // tail parameter, 1 + 1/a
};

struct PearsonCoord {
    double theta;
    double mu;
    double a;
    double nu;
};

struct SdePath {
    Eigen::VectorXd times;   // uniform grid 0, h, ..., steps*h
    Eigen::MatrixXd states;  // (steps+1) x dim, row per time point
    double h = 0.0;
    std::uint64_t seed = 0;
};

PearsonParams build_pearson_params(const Spectrum& spec, const OptimConfig& cfg);

inline PearsonCoord coord(const PearsonParams& p, Eigen::Index i) {
    return {p.theta[i], p.mu[i], p.a[i], p.nu[i]};
}

// Step-size heuristic: 0.01 over the fastest mean-reversion rate.
double default_step(const PearsonParams& params);

// Euler-Maruyama for the full diffusion approximation in x-coordinates.
// The diffusion matrix square root uses sqrt(c L(x) A^T A) = sqrt(c L(x)) Q S Q^T.
// The *_with_increments variants consume a (steps x dim) matrix of standard
// normals, which is what the coupling and step-halving checks share.
SdePath simulate_hsgd(const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
                      const Eigen::VectorXd& x0, double h, double T, Rng& rng);
SdePath simulate_hsgd_with_increments(const Dataset& ds, const Spectrum& spec,
                                      const OptimConfig& cfg, const Eigen::VectorXd& x0, double h,
                                      const Eigen::MatrixXd& dW);

// x -> z change of coordinates: Y = Q^T (x - x*), Z_i = lambda_i Y_i / sqrt(beta).
SdePath transform_to_z(const SdePath& path, const Spectrum& spec);
Eigen::VectorXd state_to_z(const Eigen::VectorXd& x, const Spectrum& spec);
Eigen::VectorXd state_from_z(const Eigen::VectorXd& z, const Spectrum& spec);

// Coupled system: the squared norm of the whole state enters every
// coordinate's diffusion coefficient.
SdePath simulate_z_system(const PearsonParams& params, const Eigen::VectorXd& z0, double h,
                          double T, Rng& rng);
SdePath simulate_z_system_with_increments(const PearsonParams& params, const Eigen::VectorXd& z0,
                                          double h, const Eigen::MatrixXd& dW);

// Scalar comparison diffusion.
SdePath simulate_pearson(const PearsonCoord& c, double z0, double h, double T, Rng& rng);
SdePath simulate_pearson_with_increments(const PearsonCoord& c, double z0, double h,
                                         const Eigen::VectorXd& dW);

// Log of the un-normalized stationary density in the sqrt(nu)-scaled variable:
//   log p(u) = -((nu+1)/2) log[1 + (u/sqrt(nu) + mu)^2] + mu (nu-1) arctan(u/sqrt(nu) + mu).
// For mu = 0 this is a Student-t log density with nu degrees of freedom.
double pearson_stationary_logpdf(double u, double nu, double mu);

// Conditional moments E[Z_t^k | Z_0 = z0] for k = 0..p via the matrix
// exponential of the polynomial-process generator. Orders k >= nu have no
// stationary limit and are flagged divergent rather than refused.
struct MomentOracleResult {
    Eigen::VectorXd values;       // length p+1
    std::vector<bool> divergent;  // per order
};
MomentOracleResult pearson_moment_oracle(const PearsonCoord& c, double z0, double t, int p);

// CSV export, header "t,z1,...,zd", one row per time point.
std::string path_csv(const SdePath& path);

// JSON report comparing a Monte-Carlo moment estimate with the oracle value:
// {order, time, mc_estimate, mc_se, oracle_value}.
std::string moment_report_json(int order, double time, double mc_estimate, double mc_se,
                               double oracle_value);

// Coupled Monte-Carlo comparison of E|Z_t^i|^p against E|Zhat_t^i|^p on shared
// Brownian increments. `ordered` uses the paired-difference standard error.
struct ConvexOrderReport {
    double lhs = 0.0;     // E|Z_t^i|^p estimate
    double rhs = 0.0;     // E|Zhat_t^i|^p estimate
    double se_lhs = 0.0;
    double se_rhs = 0.0;
    double se_diff = 0.0;
    bool ordered = false;  // lhs >= rhs - 3 * se_diff
};
std::vector<ConvexOrderReport> convex_order_check(const PearsonParams& params,
                                                  const Eigen::VectorXd& z0, double t, double p,
                                                  long n_paths, Rng& rng);
// Same coupling for an arbitrary test function g.
std::vector<ConvexOrderReport> convex_order_check_g(const PearsonParams& params,
                                                    const Eigen::VectorXd& z0, double t,
                                                    const std::function<double(double)>& g,
                                                    long n_paths, Rng& rng);

}  // namespace tailbench
