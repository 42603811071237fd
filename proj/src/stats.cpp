#include "tailbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tailbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

// Asymptotic two-sided Kolmogorov tail, 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_p(double n_d_squared) {
    if (n_d_squared < 1e-8) return 1.0;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * n_d_squared);
        p += sign * term;
        if (term < 1e-12) break;
        sign = -sign;
    }
    return std::clamp(2.0 * p, 0.0, 1.0);
}

std::vector<double> sorted_copy(const Eigen::VectorXd& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    return s;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0) || !(b > 0)) throw std::domain_error("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double t_logpdf(double x, double nu) {
    if (!(nu > 0)) throw std::domain_error("t_logpdf: nu must be > 0");
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi) -
           0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double t_cdf(double x, double nu, double kappa) {
    if (!(nu > 0) || !(kappa > 0)) throw std::domain_error("t_cdf: nu, kappa must be > 0");
    const double u = x / kappa;
    if (u == 0.0) return 0.5;
    const double w = nu / (nu + u * u);
    const double half_tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, w);
    return u > 0.0 ? 1.0 - half_tail : half_tail;
}

double t_quantile(double p, double nu, double kappa) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    // expand a bracket geometrically, then bisect
    double lo = -1.0, hi = 1.0;
    while (t_cdf(lo, nu, kappa) > p) lo *= 2.0;
    while (t_cdf(hi, nu, kappa) < p) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, nu, kappa) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::pair<double, double>> empirical_ccdf(const Eigen::VectorXd& samples) {
    if (samples.size() < 2) throw error("empirical_ccdf: need at least 2 samples");
    auto s = sorted_copy(samples);
    const double n = static_cast<double>(s.size());
    std::vector<std::pair<double, double>> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
        // P(X > s[i]) counts the strictly larger samples
        out.emplace_back(s[i], static_cast<double>(s.size() - j - 1) / n);
        i = j + 1;
    }
    return out;
}

namespace {

double t_scale_fixed_point(const std::vector<double>& z, double nu, double kappa0) {
    double k2 = kappa0 * kappa0;
    for (int it = 0; it < 60; ++it) {
        double acc = 0.0;
        for (double v : z) acc += v * v * (nu + 1.0) / (nu + v * v / k2);
        const double next = acc / static_cast<double>(z.size());
        if (std::abs(next - k2) < 1e-13 * k2) {
            k2 = next;
            break;
        }
        k2 = next;
    }
    return std::sqrt(k2);
}

double t_profile_loglik(const std::vector<double>& z, double nu, double& kappa_io) {
    kappa_io = t_scale_fixed_point(z, nu, kappa_io);
    double ll = 0.0;
    for (double v : z) ll += t_logpdf(v / kappa_io, nu);
    return ll - static_cast<double>(z.size()) * std::log(kappa_io);
}

}  // namespace

TFit fit_t_mle(const Eigen::VectorXd& samples) {
    if (samples.size() < 50) throw error("fit_t_mle: need at least 50 samples");
    TFit fit;
    fit.n = samples.size();
    fit.center = samples.mean();
    std::vector<double> z(samples.size());
    for (Eigen::Index i = 0; i < samples.size(); ++i) z[i] = samples[i] - fit.center;

    const double iqr = sample_quantile(samples, 0.75) - sample_quantile(samples, 0.25);
    if (!(iqr > 0)) throw degenerate_input("fit_t_mle: zero interquartile range");
    const double kappa0 = 0.5 * iqr;

    constexpr double kNuMin = 0.5, kNuMax = 100.0;
    constexpr int kGrid = 49;
    double best_nu = kNuMin, best_kappa = kappa0;
    double best_ll = -std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (int j = 0; j < kGrid; ++j) {
        const double nu = kNuMin * std::pow(kNuMax / kNuMin, static_cast<double>(j) / (kGrid - 1));
        double kappa = kappa0;
        const double ll = t_profile_loglik(z, nu, kappa);
        if (std::isfinite(ll) && ll > best_ll) {
            best_ll = ll;
            best_nu = nu;
            best_kappa = kappa;
            best_j = j;
        }
    }
    if (!std::isfinite(best_ll)) {
        std::ostringstream msg;
        msg << "fit_t_mle: profile likelihood non-finite on the whole grid (best nu " << best_nu
            << ")";
        throw error(msg.str());
    }

    // golden-section refinement on log(nu) between the neighboring grid nodes
    const double step = std::log(kNuMax / kNuMin) / (kGrid - 1);
    double lo = std::log(kNuMin) + step * std::max(0, best_j - 1);
    double hi = std::log(kNuMin) + step * std::min(kGrid - 1, best_j + 1);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double k1 = best_kappa, k2 = best_kappa;
    double f1 = t_profile_loglik(z, std::exp(x1), k1);
    double f2 = t_profile_loglik(z, std::exp(x2), k2);
    for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            k1 = k2;
            x2 = lo + gr * (hi - lo);
            k2 = best_kappa;
            f2 = t_profile_loglik(z, std::exp(x2), k2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            k2 = k1;
            x1 = hi - gr * (hi - lo);
            k1 = best_kappa;
            f1 = t_profile_loglik(z, std::exp(x1), k1);
        }
    }
    if (f1 > best_ll) {
        best_ll = f1;
        best_nu = std::exp(x1);
        best_kappa = k1;
    }
    if (f2 > best_ll) {
        best_ll = f2;
        best_nu = std::exp(x2);
        best_kappa = k2;
    }

    fit.nu = std::clamp(best_nu, kNuMin, kNuMax);
    fit.kappa = best_kappa;
    fit.loglik = best_ll;
    return fit;
}

KsResult ks_test(const Eigen::VectorXd& samples, const std::function<double(double)>& reference_cdf,
                 KsVariant variant) {
    if (samples.size() < 5) throw error("ks_test: need at least 5 samples");
    auto s = sorted_copy(samples);
    const double n = static_cast<double>(s.size());
    double d_plus = 0.0, d_minus = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = reference_cdf(s[i]);
        d_plus = std::max(d_plus, (static_cast<double>(i) + 1.0) / n - f);
        d_minus = std::max(d_minus, f - static_cast<double>(i) / n);
    }

    KsResult res;
    res.variant = variant;
    res.n_effective = samples.size();
    switch (variant) {
        case KsVariant::two_sided:
            res.statistic = std::max(d_plus, d_minus);
            res.p_value = kolmogorov_p(n * res.statistic * res.statistic);
            break;
        case KsVariant::one_sided_geq:
            // null: F_sample >= F_ref; evidence is the reference exceeding the
            // empirical cdf somewhere
            res.statistic = std::max(0.0, d_minus);
            res.p_value = std::min(1.0, std::exp(-2.0 * n * res.statistic * res.statistic));
            break;
        case KsVariant::one_sided_leq:
            res.statistic = std::max(0.0, d_plus);
            res.p_value = std::min(1.0, std::exp(-2.0 * n * res.statistic * res.statistic));
            break;
    }
    res.reject_at_0_05 = res.p_value < 0.05;
    return res;
}

KsResult ks_test_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() < 5 || b.size() < 5) throw error("ks_test_two_sample: need at least 5 samples each");
    auto sa = sorted_copy(a);
    auto sb = sorted_copy(b);
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
        if (sa[i] <= sb[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult res;
    res.variant = KsVariant::two_sided;
    res.statistic = d;
    const double n_eff = na * nb / (na + nb);
    res.n_effective = static_cast<long>(std::lround(n_eff));
    res.p_value = kolmogorov_p(n_eff * d * d);
    res.reject_at_0_05 = res.p_value < 0.05;
    return res;
}

std::vector<std::pair<double, double>> qq_points(const Eigen::VectorXd& samples,
                                                 const std::function<double(double)>& quantile_fn,
                                                 int k) {
    if (k < 1 || static_cast<Eigen::Index>(k) > samples.size())
        throw error("qq_points: k must be in [1, sample count]");
    auto s = sorted_copy(samples);
    const double n = static_cast<double>(s.size());
    std::vector<std::pair<double, double>> out;
    out.reserve(k);
    for (int i = 1; i <= k; ++i) {
        const double p = (static_cast<double>(i) - 0.5) / k;
        auto idx = static_cast<std::size_t>(std::ceil(p * n)) - 1;
        idx = std::min(idx, s.size() - 1);
        out.emplace_back(quantile_fn(p), s[idx]);
    }
    return out;
}

double sample_quantile(const Eigen::VectorXd& samples, double p) {
    if (samples.size() == 0) throw error("sample_quantile: empty input");
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::domain_error("sample_quantile: p must be in [0, 1]");
    auto s = sorted_copy(samples);
    const double h = p * (static_cast<double>(s.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

const char* ks_variant_name(KsVariant v) {
    switch (v) {
        case KsVariant::one_sided_geq: return "one_sided_geq";
        case KsVariant::one_sided_leq: return "one_sided_leq";
        case KsVariant::two_sided:
        default: return "two_sided";
    }
}

std::string fit_report_json(const TFit& fit) {
    nlohmann::ordered_json j;
    j["family"] = "scaled_t";
    j["params"] = {{"nu", fit.nu}, {"kappa", fit.kappa}, {"center", fit.center}};
    j["loglik"] = fit.loglik;
    j["n"] = fit.n;
    return j.dump(2) + "\n";
}

std::string fit_report_json(const StableFit& fit) {
    nlohmann::ordered_json j;
    j["family"] = "alpha_stable";
    j["params"] = {{"alpha", fit.alpha},
                   {"skew", fit.skew},
                   {"scale", fit.scale},
                   {"location", fit.location}};
    j["loglik"] = nullptr;
    j["n"] = fit.n;
    return j.dump(2) + "\n";
}

std::string ks_report_json(const KsResult& ks) {
    nlohmann::ordered_json j;
    j["variant"] = ks_variant_name(ks.variant);
    j["D"] = ks.statistic;
    j["p"] = ks.p_value;
    j["n_effective"] = ks.n_effective;
    j["decision"] = ks.reject_at_0_05 ? "reject" : "not_reject";
    return j.dump(2) + "\n";
}

}  // namespace tailbench
