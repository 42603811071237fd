#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tailbench/dataio.hpp"
#include "tailbench/diffusion.hpp"
#include "tailbench/experiment.hpp"
#include "tailbench/sgd.hpp"
#include "tailbench/stats.hpp"
#include "tailbench/tails.hpp"

namespace py = pybind11;
using namespace tailbench;

namespace {

KsVariant variant_from_string(const std::string& s) {
    if (s == "two_sided") return KsVariant::two_sided;
    if (s == "one_sided_geq") return KsVariant::one_sided_geq;
    if (s == "one_sided_leq") return KsVariant::one_sided_leq;
    throw config_error("unknown KS variant: " + s);
}

InitSampler make_init(const std::string& kind, double scale) {
    InitSampler init;
    init.scale = scale;
    if (kind == "gaussian")
        init.kind = InitSampler::Kind::gaussian;
    else if (kind == "zero")
        init.kind = InitSampler::Kind::zero;
    else if (kind == "uniform_box")
        init.kind = InitSampler::Kind::uniform_box;
    else
        throw config_error("unknown init kind: " + kind);
    return init;
}

py::dict ks_to_dict(const KsResult& r) {
    py::dict d;
    d["statistic"] = r.statistic;
    d["p_value"] = r.p_value;
    d["variant"] = ks_variant_name(r.variant);
    d["n_effective"] = r.n_effective;
    d["reject_at_0_05"] = r.reject_at_0_05;
    return d;
}

}  // namespace

PYBIND11_MODULE(_tailbench, m) {
    m.doc() = "Heavy-tail analysis of SGD on ridge-regression losses";

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<assumption_violation>(m, "AssumptionViolation", PyExc_ValueError);
    py::register_exception<parse_error>(m, "ParseError", PyExc_ValueError);
    py::register_exception<degenerate_input>(m, "DegenerateInput", PyExc_ValueError);

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("A", &Dataset::A)
        .def_readonly("b", &Dataset::b)
        .def_readonly("n", &Dataset::n)
        .def_readonly("d", &Dataset::d)
        .def_readonly("scale_min", &Dataset::scale_min)
        .def_readonly("scale_max", &Dataset::scale_max);

    py::class_<Spectrum>(m, "Spectrum")
        .def_readonly("P", &Spectrum::P)
        .def_readonly("sigma", &Spectrum::sigma)
        .def_readonly("Q", &Spectrum::Q)
        .def_readonly("x_star", &Spectrum::x_star)
        .def_readonly("alpha", &Spectrum::alpha)
        .def_readonly("beta", &Spectrum::beta)
        .def_readonly("trace_AtA", &Spectrum::trace_AtA);

    py::class_<OptimConfig>(m, "OptimConfig")
        .def(py::init<>())
        .def_readwrite("gamma", &OptimConfig::gamma)
        .def_readwrite("delta", &OptimConfig::delta)
        .def_readwrite("B", &OptimConfig::B)
        .def_readwrite("K", &OptimConfig::K)
        .def_readwrite("seed", &OptimConfig::seed)
        .def_readwrite("replicas", &OptimConfig::replicas);

    py::class_<Ensemble>(m, "Ensemble")
        .def_readonly("finals", &Ensemble::finals)
        .def_readonly("projected", &Ensemble::projected)
        .def_readonly("divergent", &Ensemble::divergent);

    py::class_<PearsonParams>(m, "PearsonParams")
        .def_readonly("theta", &PearsonParams::theta)
        .def_readonly("mu", &PearsonParams::mu)
        .def_readonly("a", &PearsonParams::a)
        .def_readonly("nu", &PearsonParams::nu);

    py::class_<SdePath>(m, "SdePath")
        .def_readonly("times", &SdePath::times)
        .def_readonly("states", &SdePath::states)
        .def_readonly("h", &SdePath::h);

    py::class_<TailBounds>(m, "TailBounds")
        .def_readonly("eta_lower", &TailBounds::eta_lower)
        .def_readonly("eta_upper", &TailBounds::eta_upper)
        .def_readonly("gamma_bar", &TailBounds::gamma_bar)
        .def_readonly("valid_lower", &TailBounds::valid_lower);

    py::class_<TFit>(m, "TFit")
        .def_readonly("nu", &TFit::nu)
        .def_readonly("kappa", &TFit::kappa)
        .def_readonly("loglik", &TFit::loglik)
        .def_readonly("center", &TFit::center)
        .def_readonly("n", &TFit::n);

    py::class_<StableFit>(m, "StableFit")
        .def_readonly("alpha", &StableFit::alpha)
        .def_readonly("skew", &StableFit::skew)
        .def_readonly("scale", &StableFit::scale)
        .def_readonly("location", &StableFit::location)
        .def_readonly("n", &StableFit::n);

    // data preparation
    m.def("gen_gaussian_synthetic",
          [](long n, long d, std::uint64_t seed) {
              RawData r = gen_gaussian_synthetic(n, d, seed);
              return py::make_tuple(r.raw, r.b, r.assumption_warning);
          },
          py::arg("n"), py::arg("d"), py::arg("seed"));
    m.def("minmax_scale",
          [](const Eigen::MatrixXd& raw) {
              ScaledMatrix s = minmax_scale(raw);
              return py::make_tuple(s.A, s.scale_min, s.scale_max);
          },
          py::arg("raw"));
    m.def("random_features", &random_features, py::arg("Y"), py::arg("d"), py::arg("seed"),
          py::arg("rescale") = 1.4142135623730951);
    m.def("load_csv",
          [](const std::string& path, long col) {
              RawData r = load_csv(path, col);
              return py::make_tuple(r.raw, r.b);
          },
          py::arg("path"), py::arg("response_column"));
    m.def("make_dataset",
          [](const Eigen::MatrixXd& raw, const Eigen::VectorXd& b, bool scale_response) {
              RawData r;
              r.raw = raw;
              r.b = b;
              DatasetOptions opts;
              opts.scale_response = scale_response;
              return make_dataset(r, opts);
          },
          py::arg("raw"), py::arg("b"), py::arg("scale_response") = false);
    m.def("spectral", &spectral, py::arg("dataset"), py::arg("delta") = 0.0);
    m.def("ridge_minimizer", &ridge_minimizer, py::arg("dataset"), py::arg("delta"));

    // sgd
    m.def("sgd_run",
          [](const Dataset& ds, const OptimConfig& cfg, const Eigen::VectorXd& x0,
             std::uint64_t seed, bool full_batch) {
              Rng rng = make_rng(seed);
              SgdOptions opts;
              opts.full_batch = full_batch;
              return sgd_run(ds, cfg, x0, rng, opts).x_final;
          },
          py::arg("dataset"), py::arg("config"), py::arg("x0"), py::arg("seed"),
          py::arg("full_batch") = false);
    m.def("gradient_noise_covariance", &gradient_noise_covariance, py::arg("dataset"),
          py::arg("x"), py::arg("B"));
    m.def("run_ensemble",
          [](const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
             const std::string& init_kind, double init_scale, int workers) {
              return run_ensemble(ds, spec, cfg, make_init(init_kind, init_scale), {}, workers);
          },
          py::arg("dataset"), py::arg("spectrum"), py::arg("config"),
          py::arg("init_kind") = "gaussian", py::arg("init_scale") = 1.0, py::arg("workers") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("project_dominant",
          [](const Ensemble& ens, const Spectrum& spec) {
              ProjectedSamples p = project_dominant(ens, spec);
              return py::make_tuple(p.y, p.z);
          },
          py::arg("ensemble"), py::arg("spectrum"));

    // diffusion
    m.def("build_pearson_params", &build_pearson_params, py::arg("spectrum"), py::arg("config"));
    m.def("simulate_pearson",
          [](double theta, double mu, double a, double z0, double h, double T,
             std::uint64_t seed) {
              Rng rng = make_rng(seed);
              PearsonCoord c{theta, mu, a, 1.0 + 1.0 / a};
              return simulate_pearson(c, z0, h, T, rng);
          },
          py::arg("theta"), py::arg("mu"), py::arg("a"), py::arg("z0"), py::arg("h"), py::arg("T"),
          py::arg("seed"));
    m.def("simulate_z_system",
          [](const PearsonParams& p, const Eigen::VectorXd& z0, double h, double T,
             std::uint64_t seed) {
              Rng rng = make_rng(seed);
              return simulate_z_system(p, z0, h, T, rng);
          },
          py::arg("params"), py::arg("z0"), py::arg("h"), py::arg("T"), py::arg("seed"));
    m.def("simulate_hsgd",
          [](const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
             const Eigen::VectorXd& x0, double h, double T, std::uint64_t seed) {
              Rng rng = make_rng(seed);
              return simulate_hsgd(ds, spec, cfg, x0, h, T, rng);
          },
          py::arg("dataset"), py::arg("spectrum"), py::arg("config"), py::arg("x0"), py::arg("h"),
          py::arg("T"), py::arg("seed"));
    m.def("transform_to_z", &transform_to_z, py::arg("path"), py::arg("spectrum"));
    m.def("pearson_stationary_logpdf", &pearson_stationary_logpdf, py::arg("u"), py::arg("nu"),
          py::arg("mu") = 0.0);
    m.def("pearson_moment_oracle",
          [](double theta, double mu, double a, double z0, double t, int p) {
              PearsonCoord c{theta, mu, a, 1.0 + 1.0 / a};
              MomentOracleResult r = pearson_moment_oracle(c, z0, t, p);
              return py::make_tuple(r.values, r.divergent);
          },
          py::arg("theta"), py::arg("mu"), py::arg("a"), py::arg("z0"), py::arg("t"), py::arg("p"));
    m.def("convex_order_check",
          [](const PearsonParams& params, const Eigen::VectorXd& z0, double t, double p,
             long n_paths, std::uint64_t seed) {
              Rng rng = make_rng(seed);
              auto reports = convex_order_check(params, z0, t, p, n_paths, rng);
              py::list out;
              for (const auto& r : reports) {
                  py::dict d;
                  d["lhs"] = r.lhs;
                  d["rhs"] = r.rhs;
                  d["se_lhs"] = r.se_lhs;
                  d["se_rhs"] = r.se_rhs;
                  d["se_diff"] = r.se_diff;
                  d["ordered"] = r.ordered;
                  out.append(d);
              }
              return out;
          },
          py::arg("params"), py::arg("z0"), py::arg("t"), py::arg("p"), py::arg("n_paths"),
          py::arg("seed"));

    // tail-index bounds
    m.def("eta_upper", &eta_upper, py::arg("n"), py::arg("B"), py::arg("delta"), py::arg("gamma"),
          py::arg("lambda1"));
    m.def("eta_lower", &eta_lower, py::arg("n"), py::arg("B"), py::arg("delta"), py::arg("gamma"),
          py::arg("lambdas"));
    m.def("gamma_bar", &gamma_bar, py::arg("n"), py::arg("B"), py::arg("delta"),
          py::arg("lambdas"));
    m.def("compute_tail_bounds", &compute_tail_bounds, py::arg("n"), py::arg("B"),
          py::arg("delta"), py::arg("gamma"), py::arg("lambdas"));
    m.def("wishart_expected_lambda1sq", &wishart_expected_lambda1sq, py::arg("n"), py::arg("d"),
          py::arg("sigma2"));
    m.def("drift_condition_margin",
          [](const Eigen::VectorXd& lambdas, double n, double B, double delta, double gamma,
             double rho) {
              DriftConditionReport r = drift_condition_margin(lambdas, n, B, delta, gamma, rho);
              py::dict d;
              d["q_at_lambda1sq"] = r.q_at_lambda1sq;
              d["q_at_lambdadsq"] = r.q_at_lambdadsq;
              d["inf_q"] = r.inf_q;
              d["vartheta"] = r.vartheta;
              d["satisfied"] = r.satisfied;
              return d;
          },
          py::arg("lambdas"), py::arg("n"), py::arg("B"), py::arg("delta"), py::arg("gamma"),
          py::arg("rho"));

    // statistics
    m.def("empirical_ccdf",
          [](const Eigen::VectorXd& s) {
              auto pairs = empirical_ccdf(s);
              Eigen::MatrixXd out(pairs.size(), 2);
              for (std::size_t i = 0; i < pairs.size(); ++i) {
                  out(i, 0) = pairs[i].first;
                  out(i, 1) = pairs[i].second;
              }
              return out;
          },
          py::arg("samples"));
    m.def("fit_t_mle", &fit_t_mle, py::arg("samples"),
          py::call_guard<py::gil_scoped_release>());
    m.def("t_logpdf", &t_logpdf, py::arg("x"), py::arg("nu"));
    m.def("t_cdf", &t_cdf, py::arg("x"), py::arg("nu"), py::arg("kappa") = 1.0);
    m.def("t_quantile", &t_quantile, py::arg("p"), py::arg("nu"), py::arg("kappa") = 1.0);
    m.def("ks_test",
          [](const Eigen::VectorXd& s, const std::function<double(double)>& cdf,
             const std::string& variant) {
              return ks_to_dict(ks_test(s, cdf, variant_from_string(variant)));
          },
          py::arg("samples"), py::arg("reference_cdf"), py::arg("variant") = "two_sided");
    m.def("ks_test_t",
          [](const Eigen::VectorXd& s, double nu, double kappa, const std::string& variant) {
              return ks_to_dict(ks_test(
                  s, [=](double x) { return t_cdf(x, nu, kappa); }, variant_from_string(variant)));
          },
          py::arg("samples"), py::arg("nu"), py::arg("kappa") = 1.0,
          py::arg("variant") = "two_sided");
    m.def("ks_test_two_sample",
          [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
              return ks_to_dict(ks_test_two_sample(a, b));
          },
          py::arg("a"), py::arg("b"));
    m.def("qq_points",
          [](const Eigen::VectorXd& s, const std::function<double(double)>& qfn, int k) {
              auto pairs = qq_points(s, qfn, k);
              Eigen::MatrixXd out(pairs.size(), 2);
              for (std::size_t i = 0; i < pairs.size(); ++i) {
                  out(i, 0) = pairs[i].first;
                  out(i, 1) = pairs[i].second;
              }
              return out;
          },
          py::arg("samples"), py::arg("quantile_fn"), py::arg("k"));
    m.def("stable_sample_cms",
          [](double alpha, double skew, double scale, double location, long n,
             std::uint64_t seed) {
              Rng rng = make_rng(seed);
              return stable_sample_cms(alpha, skew, scale, location, n, rng);
          },
          py::arg("alpha"), py::arg("skew"), py::arg("scale"), py::arg("location"), py::arg("n"),
          py::arg("seed"));
    m.def("fit_stable_quantile", &fit_stable_quantile, py::arg("samples"));
    m.def("sample_quantile", &sample_quantile, py::arg("samples"), py::arg("p"));

    // orchestration
    m.def("run_experiment_json",
          [](const std::string& config_text) {
              auto cfg = ExperimentConfig::from_json_text(config_text);
              ExperimentResult r = run_experiment(cfg);
              py::dict d;
              d["output_dir"] = r.output_dir;
              d["lambda1"] = r.lambda1;
              d["eta_lower"] = r.eta_lower;
              d["eta_upper"] = r.eta_upper;
              d["gamma_bar"] = r.gamma_bar;
              d["valid_lower"] = r.valid_lower;
              d["nu_hat"] = r.nu_hat;
              d["kappa_hat"] = r.kappa_hat;
              d["failed_stages"] = r.failed_stages;
              return d;
          },
          py::arg("config_json"));
    m.def("run_verify",
          [](const std::string& level) {
              auto checks =
                  run_verify(level == "full" ? VerifyLevel::full : VerifyLevel::fast);
              py::list out;
              for (const auto& c : checks) {
                  py::dict d;
                  d["name"] = c.name;
                  d["pass"] = c.pass;
                  d["measured"] = c.measured;
                  d["tolerance"] = c.tolerance;
                  out.append(d);
              }
              return out;
          },
          py::arg("level") = "fast");
}
