#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tailbench/stats.hpp"

namespace tailbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

#include "stable_tables.inc"

double lerp(double a, double b, double t) { return a + t * (b - a); }

// Interpolate a [beta][alpha] table at (alpha, beta_abs), bilinear.
double table_at(const double tab[kBetaCount][kAlphaCount], double alpha, double beta) {
    alpha = std::clamp(alpha, kAlphaGrid[0], kAlphaGrid[kAlphaCount - 1]);
    beta = std::clamp(beta, kBetaGrid[0], kBetaGrid[kBetaCount - 1]);
    int ia = 0;
    while (ia + 2 < kAlphaCount && kAlphaGrid[ia + 1] <= alpha) ++ia;
    int ib = 0;
    while (ib + 2 < kBetaCount && kBetaGrid[ib + 1] <= beta) ++ib;
    const double ta = (alpha - kAlphaGrid[ia]) / (kAlphaGrid[ia + 1] - kAlphaGrid[ia]);
    const double tb = (beta - kBetaGrid[ib]) / (kBetaGrid[ib + 1] - kBetaGrid[ib]);
    return lerp(lerp(tab[ib][ia], tab[ib][ia + 1], ta), lerp(tab[ib + 1][ia], tab[ib + 1][ia + 1], ta),
                tb);
}

// Invert nu_alpha -> alpha at fixed beta; the tabulated ratio is strictly
// decreasing in alpha.
double alpha_from_nu_alpha(double nu_alpha, double beta) {
    beta = std::clamp(beta, kBetaGrid[0], kBetaGrid[kBetaCount - 1]);
    int ib = 0;
    while (ib + 2 < kBetaCount && kBetaGrid[ib + 1] <= beta) ++ib;
    const double tb = (beta - kBetaGrid[ib]) / (kBetaGrid[ib + 1] - kBetaGrid[ib]);
    double row[kAlphaCount];
    for (int a = 0; a < kAlphaCount; ++a) row[a] = lerp(kNuAlpha[ib][a], kNuAlpha[ib + 1][a], tb);

    if (nu_alpha >= row[0]) return kAlphaGrid[0];
    if (nu_alpha <= row[kAlphaCount - 1]) return kAlphaGrid[kAlphaCount - 1];
    for (int a = 0; a + 1 < kAlphaCount; ++a) {
        if (nu_alpha <= row[a] && nu_alpha >= row[a + 1]) {
            const double t = (row[a] - nu_alpha) / (row[a] - row[a + 1]);
            return lerp(kAlphaGrid[a], kAlphaGrid[a + 1], t);
        }
    }
    return kAlphaGrid[kAlphaCount - 1];
}

}  // namespace

Eigen::VectorXd stable_sample_cms(double alpha, double skew, double scale, double location,
                                  long n, Rng& rng) {
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw std::domain_error("stable_sample_cms: alpha must be in (0, 2]");
    if (!(skew >= -1.0) || !(skew <= 1.0))
        throw std::domain_error("stable_sample_cms: skew must be in [-1, 1]");
    if (!(scale > 0.0)) throw std::domain_error("stable_sample_cms: scale must be > 0");
    if (n < 1) throw std::domain_error("stable_sample_cms: n must be >= 1");

    std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
    Eigen::VectorXd out(n);
    const bool alpha_is_one = std::abs(alpha - 1.0) < 1e-10;

    if (!alpha_is_one) {
        const double tan_half = std::tan(0.5 * kPi * alpha);
        const double b0 = std::atan(skew * tan_half) / alpha;
        const double s0 = std::pow(1.0 + skew * skew * tan_half * tan_half, 0.5 / alpha);
        for (long i = 0; i < n; ++i) {
            const double v = kPi * (unif(rng) - 0.5);
            const double w = -std::log(unif(rng));  // Exp(1)
            const double x = s0 * std::sin(alpha * (v + b0)) /
                             std::pow(std::cos(v), 1.0 / alpha) *
                             std::pow(std::cos(v - alpha * (v + b0)) / w, (1.0 - alpha) / alpha);
            out[i] = scale * x + location;
        }
    } else {
        const double half_pi = 0.5 * kPi;
        // S1 continuity shift at alpha = 1
        const double shift = (skew != 0.0) ? (2.0 / kPi) * skew * scale * std::log(scale) : 0.0;
        for (long i = 0; i < n; ++i) {
            const double v = kPi * (unif(rng) - 0.5);
            const double w = -std::log(unif(rng));
            const double t = half_pi + skew * v;
            const double x =
                (1.0 / half_pi) * (t * std::tan(v) - skew * std::log(half_pi * w * std::cos(v) / t));
            out[i] = scale * x + shift + location;
        }
    }
    return out;
}

StableFit fit_stable_quantile(const Eigen::VectorXd& samples) {
    if (samples.size() < 100) throw error("fit_stable_quantile: need at least 100 samples");
    const double q05 = sample_quantile(samples, 0.05);
    const double q25 = sample_quantile(samples, 0.25);
    const double q50 = sample_quantile(samples, 0.50);
    const double q75 = sample_quantile(samples, 0.75);
    const double q95 = sample_quantile(samples, 0.95);

    const double iqr = q75 - q25;
    const double spread = q95 - q05;
    if (!(iqr > 0) || !(spread > 0))
        throw degenerate_input("fit_stable_quantile: degenerate sample quantiles");

    const double nu_alpha = spread / iqr;
    const double nu_beta_signed = (q95 + q05 - 2.0 * q50) / spread;
    const double sign = nu_beta_signed < 0.0 ? -1.0 : 1.0;
    const double nu_beta = std::abs(nu_beta_signed);

    // Solve the two quantile-ratio equations: nu_beta grows with beta, and at
    // each candidate beta the alpha is pinned by nu_alpha.
    double beta = 0.0;
    {
        double lo = 0.0, hi = 1.0;
        const double f_hi = table_at(kNuBeta, alpha_from_nu_alpha(nu_alpha, hi), hi) - nu_beta;
        if (f_hi <= 0.0) {
            beta = 1.0;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double f = table_at(kNuBeta, alpha_from_nu_alpha(nu_alpha, mid), mid) - nu_beta;
                if (f < 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            beta = 0.5 * (lo + hi);
        }
    }
    double alpha = alpha_from_nu_alpha(nu_alpha, beta);
    // Near the Gaussian end the skew ratio carries no information.
    if (alpha > 1.95) beta = std::min(beta, nu_beta);

    StableFit fit;
    fit.n = samples.size();
    fit.alpha = std::clamp(alpha, 0.6, 2.0);
    fit.skew = sign * beta;
    fit.scale = iqr / table_at(kNuC, fit.alpha, beta);
    fit.location = q50 - fit.scale * sign * table_at(kNuZeta, fit.alpha, beta);
    return fit;
}

}  // namespace tailbench
