#include "tailbench/tails.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace tailbench {

namespace {

void check_domain(double n, double B, double delta, double gamma, double lambda1) {
    if (!(n > 0) || !(B > 0)) throw std::domain_error("tail bounds: n and B must be positive");
    if (!(delta >= 0)) throw std::domain_error("tail bounds: delta must be >= 0");
    if (!(gamma > 0)) throw std::domain_error("tail bounds: gamma must be positive");
    if (!(lambda1 > 0)) throw std::domain_error("tail bounds: lambda1 must be positive");
}

double spectral_correction(const Eigen::VectorXd& lambdas) {
    const double l1sq = lambdas[0] * lambdas[0];
    double sum = 0.0;
    for (Eigen::Index i = 1; i < lambdas.size(); ++i) sum += lambdas[i] * lambdas[i];
    return sum / l1sq;
}

}  // namespace

double eta_upper(double n, double B, double delta, double gamma, double lambda1) {
    check_domain(n, B, delta, gamma, lambda1);
    const double l1sq = lambda1 * lambda1;
    return 1.0 + 2.0 * n * B * (l1sq + n * delta) / (gamma * l1sq * l1sq);
}

double eta_lower(double n, double B, double delta, double gamma,
                 const Eigen::VectorXd& lambdas) {
    if (lambdas.size() < 1) throw std::domain_error("eta_lower: empty spectrum");
    return eta_upper(n, B, delta, gamma, lambdas[0]) - spectral_correction(lambdas);
}

double gamma_bar(double n, double B, double delta, const Eigen::VectorXd& lambdas) {
    if (lambdas.size() < 1) throw std::domain_error("gamma_bar: empty spectrum");
    const double l1sq = lambdas[0] * lambdas[0];
    const double trace = lambdas.squaredNorm();
    if (!(l1sq > 0) || !(trace > 0)) throw std::domain_error("gamma_bar: spectrum must be nonzero");
    if (!(n > 0) || !(B > 0) || !(delta >= 0))
        throw std::domain_error("gamma_bar: invalid parameters");
    return 2.0 * n * B * (l1sq + n * delta) / (l1sq * trace);
}

TailBounds compute_tail_bounds(double n, double B, double delta, double gamma,
                               const Eigen::VectorXd& lambdas) {
    TailBounds tb;
    tb.eta_upper = eta_upper(n, B, delta, gamma, lambdas[0]);
    tb.eta_lower = tb.eta_upper - spectral_correction(lambdas);
    tb.gamma_bar = gamma_bar(n, B, delta, lambdas);
    tb.valid_lower = gamma < tb.gamma_bar;
    return tb;
}

double wishart_expected_lambda1sq(double n, double d, double sigma2) {
    if (!(n > d) || !(d >= 1)) throw std::domain_error("wishart_expected_lambda1sq: need n > d >= 1");
    const double s = std::sqrt(n - 1.0) + std::sqrt(d);
    return sigma2 * s * s;
}

DriftConditionReport drift_condition_margin(const Eigen::VectorXd& lambdas, double n, double B,
                                            double delta, double gamma, double rho) {
    if (lambdas.size() < 1) throw std::domain_error("drift_condition_margin: empty spectrum");
    if (!(rho >= 2.0)) throw std::domain_error("drift_condition_margin: rho must be >= 2");
    check_domain(n, B, delta, gamma, lambdas[0]);

    // Evaluate in extended precision: q is a difference of large same-order
    // terms and must resolve an exact zero at rho = vartheta.
    const long double nB2 = 2.0L * static_cast<long double>(n) * static_cast<long double>(B);
    const long double nd = static_cast<long double>(n) * static_cast<long double>(delta);
    const long double g = static_cast<long double>(gamma);
    long double trace = 0.0L;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const long double l = static_cast<long double>(lambdas[i]);
        trace += l * l;
    }
    const long double m1 = static_cast<long double>(lambdas[0]) * lambdas[0];
    const long double md =
        static_cast<long double>(lambdas[lambdas.size() - 1]) * lambdas[lambdas.size() - 1];

    auto q = [&](long double m, long double r) -> long double {
        return nB2 * (m + nd) / g - trace * m + (2.0L - r) * m * m;
    };

    DriftConditionReport rep;
    rep.vartheta = static_cast<double>(2.0L + nB2 * (m1 + nd) / (g * m1 * m1) - trace / m1);
    rep.q_at_lambda1sq = static_cast<double>(q(m1, rho));
    rep.q_at_lambdadsq = static_cast<double>(q(md, rho));
    rep.inf_q = std::min(rep.q_at_lambda1sq, rep.q_at_lambdadsq);
    rep.satisfied = rep.inf_q > 0.0;
    return rep;
}

std::string bounds_report_json(double n, double d, double B, double gamma, double delta,
                               const Eigen::VectorXd& lambdas) {
    TailBounds tb = compute_tail_bounds(n, B, delta, gamma, lambdas);
    nlohmann::ordered_json j;
    j["n"] = n;
    j["d"] = d;
    j["B"] = B;
    j["gamma"] = gamma;
    j["delta"] = delta;
    j["lambda1"] = lambdas[0];
    j["trace_AtA"] = lambdas.squaredNorm();
    j["eta_lower"] = tb.eta_lower;
    j["eta_upper"] = tb.eta_upper;
    j["gamma_bar"] = tb.gamma_bar;
    j["valid_lower"] = tb.valid_lower;
    return j.dump(2) + "\n";
}

}  // namespace tailbench
