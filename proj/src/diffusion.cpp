#include "tailbench/diffusion.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

namespace tailbench {

PearsonParams build_pearson_params(const Spectrum& spec, const OptimConfig& cfg) {
    cfg.validate();
    if (!(spec.beta > 0)) throw assumption_violation("build_pearson_params: beta must be > 0");
    const Eigen::Index d = spec.sigma.size();
    const double n = static_cast<double>(spec.P.rows());
    const double sqrt_beta = std::sqrt(spec.beta);

    PearsonParams p;
    p.theta.resize(d);
    p.mu.resize(d);
    p.a.resize(d);
    p.nu.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double l = spec.sigma[i];
        if (!(l > 0)) {
            std::ostringstream msg;
            msg << "build_pearson_params: singular value " << (i + 1) << " is not positive";
            throw assumption_violation(msg.str());
        }
        const double l2 = l * l;
        p.theta[i] = cfg.gamma * (l2 / n + cfg.delta);
        p.mu[i] = n * l * spec.alpha[i] / (sqrt_beta * (l2 + n * cfg.delta));
        p.a[i] = cfg.gamma * l2 * l2 / (2.0 * n * cfg.B * (l2 + n * cfg.delta));
        p.nu[i] = 1.0 + 1.0 / p.a[i];
    }
    return p;
}

double default_step(const PearsonParams& params) { return 0.01 / params.theta.maxCoeff(); }

namespace {

Eigen::Index step_count(double h, double T) {
    if (!(h > 0)) throw config_error("simulate: step size must be > 0");
    if (!(T >= h)) throw config_error("simulate: horizon must be at least one step");
    return static_cast<Eigen::Index>(std::llround(T / h));
}

void check_finite(const Eigen::VectorXd& state, Eigen::Index step) {
    if (!state.allFinite()) {
        std::ostringstream msg;
        msg << "simulate: non-finite state at step " << step;
        throw divergence_error(msg.str(), step);
    }
}

Eigen::VectorXd uniform_times(Eigen::Index steps, double h) {
    Eigen::VectorXd t(steps + 1);
    for (Eigen::Index k = 0; k <= steps; ++k) t[k] = h * static_cast<double>(k);
    return t;
}

}  // namespace

SdePath simulate_hsgd_with_increments(const Dataset& ds, const Spectrum& spec,
                                      const OptimConfig& cfg, const Eigen::VectorXd& x0, double h,
                                      const Eigen::MatrixXd& dW) {
    cfg.validate();
    if (x0.size() != ds.d) throw config_error("simulate_hsgd: x0 dimension mismatch");
    if (dW.cols() != ds.d) throw config_error("simulate_hsgd: increment dimension mismatch");
    const Eigen::Index steps = dW.rows();
    const double n = static_cast<double>(ds.n);
    const double sqrt_h = std::sqrt(h);

    SdePath path;
    path.h = h;
    path.times = uniform_times(steps, h);
    path.states.resize(steps + 1, ds.d);
    path.states.row(0) = x0.transpose();

    Eigen::VectorXd x = x0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        Eigen::VectorXd resid = ds.A * x - ds.b;
        Eigen::VectorXd drift = -cfg.gamma * (ds.A.transpose() * resid / n + cfg.delta * x);
        const double loss = std::max(0.0, 0.5 * resid.squaredNorm());
        const double scale = cfg.gamma * std::sqrt(2.0 * loss / (n * n * cfg.B));
        // sqrt(L A^T A) xi = Q S (Q^T xi) sqrt(L)
        Eigen::VectorXd xi = dW.row(k).transpose();
        Eigen::VectorXd noise = spec.Q * (spec.sigma.asDiagonal() * (spec.Q.transpose() * xi));
        x += h * drift + (scale * sqrt_h) * noise;
        check_finite(x, k + 1);
        path.states.row(k + 1) = x.transpose();
    }
    return path;
}

SdePath simulate_hsgd(const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
                      const Eigen::VectorXd& x0, double h, double T, Rng& rng) {
    const Eigen::Index steps = step_count(h, T);
    Eigen::MatrixXd dW = gaussian_matrix(steps, ds.d, rng);
    return simulate_hsgd_with_increments(ds, spec, cfg, x0, h, dW);
}

Eigen::VectorXd state_to_z(const Eigen::VectorXd& x, const Spectrum& spec) {
    Eigen::VectorXd y = spec.Q.transpose() * (x - spec.x_star);
    return y.cwiseProduct(spec.sigma) / std::sqrt(spec.beta);
}

Eigen::VectorXd state_from_z(const Eigen::VectorXd& z, const Spectrum& spec) {
    Eigen::VectorXd y = std::sqrt(spec.beta) * z.cwiseQuotient(spec.sigma);
    return spec.x_star + spec.Q * y;
}

SdePath transform_to_z(const SdePath& path, const Spectrum& spec) {
    SdePath out;
    out.times = path.times;
    out.h = path.h;
    out.seed = path.seed;
    Eigen::MatrixXd centered = path.states.rowwise() - spec.x_star.transpose();
    out.states = (centered * spec.Q) * spec.sigma.asDiagonal() / std::sqrt(spec.beta);
    return out;
}

SdePath simulate_z_system_with_increments(const PearsonParams& params, const Eigen::VectorXd& z0,
                                          double h, const Eigen::MatrixXd& dW) {
    const Eigen::Index d = params.theta.size();
    if (z0.size() != d) throw config_error("simulate_z_system: z0 dimension mismatch");
    if (dW.cols() != d) throw config_error("simulate_z_system: increment dimension mismatch");
    const Eigen::Index steps = dW.rows();
    const double sqrt_h = std::sqrt(h);

    SdePath path;
    path.h = h;
    path.times = uniform_times(steps, h);
    path.states.resize(steps + 1, d);
    path.states.row(0) = z0.transpose();

    Eigen::VectorXd z = z0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        const double s2 = z.squaredNorm() + 1.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double diff = std::sqrt(2.0 * params.theta[i] * params.a[i] * s2);
            z[i] += -params.theta[i] * (z[i] - params.mu[i]) * h + diff * sqrt_h * dW(k, i);
        }
        check_finite(z, k + 1);
        path.states.row(k + 1) = z.transpose();
    }
    return path;
}

SdePath simulate_z_system(const PearsonParams& params, const Eigen::VectorXd& z0, double h,
                          double T, Rng& rng) {
    const Eigen::Index steps = step_count(h, T);
    Eigen::MatrixXd dW = gaussian_matrix(steps, params.theta.size(), rng);
    return simulate_z_system_with_increments(params, z0, h, dW);
}

SdePath simulate_pearson_with_increments(const PearsonCoord& c, double z0, double h,
                                         const Eigen::VectorXd& dW) {
    const Eigen::Index steps = dW.size();
    const double sqrt_h = std::sqrt(h);

    SdePath path;
    path.h = h;
    path.times = uniform_times(steps, h);
    path.states.resize(steps + 1, 1);
    path.states(0, 0) = z0;

    double z = z0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        const double diff = std::sqrt(2.0 * c.theta * c.a * (z * z + 1.0));
        z += -c.theta * (z - c.mu) * h + diff * sqrt_h * dW[k];
        if (!std::isfinite(z)) {
            std::ostringstream msg;
            msg << "simulate_pearson: non-finite state at step " << (k + 1);
            throw divergence_error(msg.str(), k + 1);
        }
        path.states(k + 1, 0) = z;
    }
    return path;
}

SdePath simulate_pearson(const PearsonCoord& c, double z0, double h, double T, Rng& rng) {
    const Eigen::Index steps = step_count(h, T);
    return simulate_pearson_with_increments(c, z0, h, gaussian_vector(steps, rng));
}

double pearson_stationary_logpdf(double u, double nu, double mu) {
    if (!(nu > 0)) throw std::domain_error("pearson_stationary_logpdf: nu must be > 0");
    const double w = u / std::sqrt(nu) + mu;
    return -0.5 * (nu + 1.0) * std::log1p(w * w) + mu * (nu - 1.0) * std::atan(w);
}

MomentOracleResult pearson_moment_oracle(const PearsonCoord& c, double z0, double t, int p) {
    if (p < 0) throw std::domain_error("pearson_moment_oracle: order must be >= 0");
    if (p > 30) throw std::domain_error("pearson_moment_oracle: order above 30 is numerically unstable");
    if (!(t >= 0)) throw std::domain_error("pearson_moment_oracle: time must be >= 0");

    const double g0 = c.theta * c.mu;
    const double g1 = c.theta * c.a;
    const double g2 = -c.theta;
    const double g3 = c.theta * c.a;

    // Generator action on monomials:
    //   L z^k = k (g2 + (k-1) g3) z^k + k g0 z^{k-1} + k (k-1) g1 z^{k-2},
    // a closed band system for the moment vector (E z^0, ..., E z^p).
    const int m = p + 1;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k <= p; ++k) {
        G(k, k) = k * (g2 + (k - 1) * g3);
        G(k, k - 1) = k * g0;
        if (k >= 2) G(k, k - 2) = static_cast<double>(k) * (k - 1) * g1;
    }

    Eigen::VectorXd m0(m);
    double zk = 1.0;
    for (int k = 0; k < m; ++k) {
        m0[k] = zk;
        zk *= z0;
    }

    MomentOracleResult res;
    res.values = (t * G).exp() * m0;
    res.divergent.resize(m);
    for (int k = 0; k < m; ++k) res.divergent[k] = (static_cast<double>(k) >= c.nu);
    return res;
}

std::string path_csv(const SdePath& path) {
    std::string out = "t";
    for (Eigen::Index j = 0; j < path.states.cols(); ++j)
        out += ",z" + std::to_string(j + 1);
    out += '\n';
    char buf[40];
    for (Eigen::Index k = 0; k < path.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", path.times[k]);
        out += buf;
        for (Eigen::Index j = 0; j < path.states.cols(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", path.states(k, j));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string moment_report_json(int order, double time, double mc_estimate, double mc_se,
                               double oracle_value) {
    nlohmann::ordered_json j;
    j["order"] = order;
    j["time"] = time;
    j["mc_estimate"] = mc_estimate;
    j["mc_se"] = mc_se;
    j["oracle_value"] = oracle_value;
    return j.dump(2) + "\n";
}

namespace {

std::vector<ConvexOrderReport> coupled_compare(const PearsonParams& params,
                                               const Eigen::VectorXd& z0, double t,
                                               const std::function<double(double)>& g,
                                               long n_paths, Rng& rng) {
    const Eigen::Index d = params.theta.size();
    if (z0.size() != d) throw config_error("convex_order_check: z0 dimension mismatch");
    if (n_paths < 2) throw config_error("convex_order_check: need at least 2 paths");
    const double h = default_step(params);
    const Eigen::Index steps = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(t / h)));
    const double h_eff = t / static_cast<double>(steps);
    const double sqrt_h = std::sqrt(h_eff);

    Eigen::VectorXd sum_l = Eigen::VectorXd::Zero(d), sum_l2 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_r = Eigen::VectorXd::Zero(d), sum_r2 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_d = Eigen::VectorXd::Zero(d), sum_d2 = Eigen::VectorXd::Zero(d);

    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(d), zhat(d);
    for (long path = 0; path < n_paths; ++path) {
        z = z0;
        zhat = z0;
        for (Eigen::Index k = 0; k < steps; ++k) {
            const double s2 = z.squaredNorm() + 1.0;
            for (Eigen::Index i = 0; i < d; ++i) {
                const double xi = normal(rng);
                const double two_ta = 2.0 * params.theta[i] * params.a[i];
                const double dz = -params.theta[i] * (z[i] - params.mu[i]) * h_eff +
                                  std::sqrt(two_ta * s2) * sqrt_h * xi;
                const double dzh = -params.theta[i] * (zhat[i] - params.mu[i]) * h_eff +
                                   std::sqrt(two_ta * (zhat[i] * zhat[i] + 1.0)) * sqrt_h * xi;
                z[i] += dz;
                zhat[i] += dzh;
            }
        }
        for (Eigen::Index i = 0; i < d; ++i) {
            const double gl = g(z[i]);
            const double gr = g(zhat[i]);
            sum_l[i] += gl;
            sum_l2[i] += gl * gl;
            sum_r[i] += gr;
            sum_r2[i] += gr * gr;
            const double diff = gl - gr;
            sum_d[i] += diff;
            sum_d2[i] += diff * diff;
        }
    }

    const double N = static_cast<double>(n_paths);
    std::vector<ConvexOrderReport> out(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        ConvexOrderReport& r = out[i];
        r.lhs = sum_l[i] / N;
        r.rhs = sum_r[i] / N;
        r.se_lhs = std::sqrt(std::max(0.0, sum_l2[i] / N - r.lhs * r.lhs) / N);
        r.se_rhs = std::sqrt(std::max(0.0, sum_r2[i] / N - r.rhs * r.rhs) / N);
        const double mean_d = sum_d[i] / N;
        r.se_diff = std::sqrt(std::max(0.0, sum_d2[i] / N - mean_d * mean_d) / N);
        r.ordered = mean_d >= -3.0 * r.se_diff;
    }
    return out;
}

}  // namespace

std::vector<ConvexOrderReport> convex_order_check(const PearsonParams& params,
                                                  const Eigen::VectorXd& z0, double t, double p,
                                                  long n_paths, Rng& rng) {
    if (!(p >= 1)) throw config_error("convex_order_check: moment order must be >= 1");
    auto g = [p](double z) { return std::pow(std::abs(z), p); };
    return coupled_compare(params, z0, t, g, n_paths, rng);
}

std::vector<ConvexOrderReport> convex_order_check_g(const PearsonParams& params,
                                                    const Eigen::VectorXd& z0, double t,
                                                    const std::function<double(double)>& g,
                                                    long n_paths, Rng& rng) {
    return coupled_compare(params, z0, t, g, n_paths, rng);
}

}  // namespace tailbench
