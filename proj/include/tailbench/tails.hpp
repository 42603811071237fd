#pragma once

#include <string>

#include <Eigen/Dense>

#include "tailbench/common.hpp"

namespace tailbench {

struct TailBounds {
    double eta_lower = 0.0;  // lower bound on the asymptotic tail-index
    double eta_upper = 0.0;  // upper bound
    double gamma_bar = 0.0;  // critical learning rate below which the lower bound applies
    bool valid_lower = false;
};

// 1 + 2 n B (lambda1^2 + n delta) / (gamma lambda1^4)
double eta_upper(double n, double B, double delta, double gamma, double lambda1);

// eta_upper minus the spectral correction sum_{i>=2} lambda_i^2 / lambda1^2.
double eta_lower(double n, double B, double delta, double gamma,
                 const Eigen::VectorXd& lambdas);

// 2 n B (lambda1^2 + n delta) / (lambda1^2 sum_i lambda_i^2)
double gamma_bar(double n, double B, double delta, const Eigen::VectorXd& lambdas);

TailBounds compute_tail_bounds(double n, double B, double delta, double gamma,
                               const Eigen::VectorXd& lambdas);

// Expected squared top singular value of an n x d standard Gaussian matrix
// scaled by sigma2: sigma2 (sqrt(n-1) + sqrt(d))^2.
double wishart_expected_lambda1sq(double n, double d, double sigma2);

// Endpoint evaluation of the moment-stability margin
//   q(m, rho) = 2 n B (m + n delta) / gamma - tr(A^T A) m + (2 - rho) m^2
// over m in [lambda_d^2, lambda1^2]; q is concave in m there, so the infimum
// sits at an endpoint. vartheta is the exponent at which q(lambda1^2, .) hits zero.
struct DriftConditionReport {
    double q_at_lambda1sq = 0.0;
    double q_at_lambdadsq = 0.0;
    double inf_q = 0.0;
    double vartheta = 0.0;
    bool satisfied = false;
};

DriftConditionReport drift_condition_margin(const Eigen::VectorXd& lambdas, double n, double B,
                                            double delta, double gamma, double rho);

// Report JSON: {n, d, B, gamma, delta, lambda1, trace_AtA, eta_lower, eta_upper,
// gamma_bar, valid_lower}.
std::string bounds_report_json(double n, double d, double B, double gamma, double delta,
                               const Eigen::VectorXd& lambdas);

}  // namespace tailbench
