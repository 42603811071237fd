#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tailbench/common.hpp"
#include "tailbench/rng.hpp"

namespace tailbench {

// Scaled symmetric t fit, z ~ kappa * t(nu).
struct TFit {
    double nu = 0.0;
    double kappa = 0.0;
    double loglik = 0.0;
    double center = 0.0;  // subtracted sample mean
    long n = 0;
};

// Alpha-stable fit from quantile matching; no likelihood is reported.
struct StableFit {
    double alpha = 2.0;
    double skew = 0.0;
    double scale = 1.0;
    double location = 0.0;
    long n = 0;
};

enum class KsVariant { two_sided, one_sided_geq, one_sided_leq };

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    KsVariant variant = KsVariant::two_sided;
    long n_effective = 0;
    bool reject_at_0_05 = false;
};

// Right-continuous empirical CCDF at the sorted sample points, ties merged.
std::vector<std::pair<double, double>> empirical_ccdf(const Eigen::VectorXd& samples);

// Profile-likelihood MLE of (nu, kappa) over nu in [0.5, 100]: inner scale
// update per grid point, then local refinement around the best node.
TFit fit_t_mle(const Eigen::VectorXd& samples);

double t_logpdf(double x, double nu);
// CDF of kappa * t(nu) through the regularized incomplete beta function.
double t_cdf(double x, double nu, double kappa = 1.0);
double t_quantile(double p, double nu, double kappa = 1.0);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

KsResult ks_test(const Eigen::VectorXd& samples, const std::function<double(double)>& reference_cdf,
                 KsVariant variant = KsVariant::two_sided);
KsResult ks_test_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// (theoretical, empirical) quantile pairs at plotting positions (i - 0.5) / k.
std::vector<std::pair<double, double>> qq_points(const Eigen::VectorXd& samples,
                                                 const std::function<double(double)>& quantile_fn,
                                                 int k);

// Chambers-Mallows-Stuck sampler, S1 parameterization: alpha = 2 is N(0, 2 scale^2),
// alpha = 1 with zero skew is Cauchy.
Eigen::VectorXd stable_sample_cms(double alpha, double skew, double scale, double location,
                                  long n, Rng& rng);

// McCulloch-style quantile estimator on the 5/25/50/75/95% sample quantiles;
// alpha is clamped to the table domain [0.6, 2.0].
StableFit fit_stable_quantile(const Eigen::VectorXd& samples);

// Linear-interpolation sample quantile of unsorted data.
double sample_quantile(const Eigen::VectorXd& samples, double p);

std::string fit_report_json(const TFit& fit);
std::string fit_report_json(const StableFit& fit);
std::string ks_report_json(const KsResult& ks);
const char* ks_variant_name(KsVariant v);

}  // namespace tailbench
