#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "tailbench/dataio.hpp"
#include "tailbench/experiment.hpp"
#include "tailbench/tails.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerifyFailed = 3;

int cmd_run(const std::string& config_path, const std::string& output_override,
            bool scale_response) {
    auto cfg = tailbench::ExperimentConfig::from_json_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (scale_response) cfg.dataset.scale_response = true;
    auto res = tailbench::run_experiment(cfg);
    std::cout << "experiment written to " << res.output_dir << "\n"
              << "  lambda1   " << res.lambda1 << "\n"
              << "  eta_lower " << res.eta_lower << "\n"
              << "  eta_upper " << res.eta_upper << "\n"
              << "  gamma_bar " << res.gamma_bar << (res.valid_lower ? "  (gamma < gamma_bar)" : "")
              << "\n"
              << "  nu_hat    " << res.nu_hat << "  kappa_hat " << res.kappa_hat << "\n";
    if (!res.failed_stages.empty()) {
        std::cerr << "failed stages:";
        for (const auto& s : res.failed_stages) std::cerr << " " << s;
        std::cerr << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& output_override) {
    auto cfg = tailbench::ExperimentConfig::from_json_file(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    auto results = tailbench::run_sweep(cfg);
    bool any_failed = false;
    std::cout << "value  lambda1  eta_lower  eta_upper  nu_hat\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::cout << cfg.sweep->values[i] << "  " << r.lambda1 << "  " << r.eta_lower << "  "
                  << r.eta_upper << "  " << r.nu_hat << "\n";
        any_failed = any_failed || !r.failed_stages.empty();
    }
    std::cout << "sweep written to " << cfg.output_dir << "\n";
    return any_failed ? kExitRuntime : kExitOk;
}

int cmd_verify(const std::string& level, const std::string& out_path) {
    const auto lvl =
        level == "full" ? tailbench::VerifyLevel::full : tailbench::VerifyLevel::fast;
    auto checks = tailbench::run_verify(lvl);
    bool all_pass = true;
    for (const auto& c : checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  measured=" << c.measured
                  << " tolerance=" << c.tolerance << " (" << c.seconds << "s)\n";
        all_pass = all_pass && c.pass;
    }
    const std::string report = tailbench::verify_report_json(checks);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << report;
        std::cout << "report written to " << out_path << "\n";
    }
    return all_pass ? kExitOk : kExitVerifyFailed;
}

int cmd_bounds(double n, double d, double B, double gamma, double delta, double lambda1,
               const std::string& spectrum_csv) {
    Eigen::VectorXd lambdas;
    if (!spectrum_csv.empty()) {
        std::ifstream in(spectrum_csv);
        if (!in) throw tailbench::config_error("cannot open spectrum file: " + spectrum_csv);
        std::vector<double> vals;
        std::string tok;
        while (in) {
            int c = in.peek();
            if (c == EOF) break;
            if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
                in.get();
                continue;
            }
            double v;
            if (!(in >> v)) throw tailbench::config_error("spectrum file: non-numeric entry");
            vals.push_back(v);
        }
        if (vals.empty()) throw tailbench::config_error("spectrum file is empty");
        std::sort(vals.begin(), vals.end(), std::greater<>());
        lambdas = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        if (d <= 0) d = static_cast<double>(vals.size());
    } else {
        lambdas = Eigen::VectorXd::Constant(1, lambda1);
    }
    if (d <= 0) d = static_cast<double>(lambdas.size());
    std::cout << tailbench::bounds_report_json(n, d, B, gamma, delta, lambdas);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tailbench: heavy-tail analysis of SGD on ridge-regression losses"};
    app.require_subcommand(1);

    std::string config_path, output_override;
    bool scale_response = false;
    auto* run = app.add_subcommand("run", "run a full experiment from a JSON config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--output", output_override, "override the configured output directory");
    run->add_flag("--scale-response", scale_response, "min-max scale the response alongside the data");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep from a JSON config");
    sweep->add_option("--config", config_path, "sweep config (JSON)")->required();
    sweep->add_option("--output", output_override, "override the configured output directory");

    std::string level = "fast", verify_out;
    auto* verify = app.add_subcommand("verify", "run the aggregated property checks");
    verify->add_option("--level", level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));
    verify->add_option("--out", verify_out, "write the JSON report to this file");

    double n = 0, d = 0, B = 1, gamma = 0, delta = 0, lambda1 = 0;
    std::string spectrum_csv;
    auto* bounds = app.add_subcommand("bounds", "closed-form tail-index bounds");
    bounds->add_option("--n", n, "sample count")->required();
    bounds->add_option("--d", d, "feature dimension");
    bounds->add_option("--B", B, "batch size");
    bounds->add_option("--gamma", gamma, "learning rate")->required();
    bounds->add_option("--delta", delta, "regularization");
    bounds->add_option("--lambda1", lambda1, "largest singular value");
    bounds->add_option("--spectrum", spectrum_csv, "file with the full singular value list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, output_override, scale_response);
        if (sweep->parsed()) return cmd_sweep(config_path, output_override);
        if (verify->parsed()) return cmd_verify(level, verify_out);
        if (bounds->parsed()) {
            if (spectrum_csv.empty() && !(lambda1 > 0)) {
                std::cerr << "bounds: provide --lambda1 or --spectrum\n";
                return kExitConfig;
            }
            return cmd_bounds(n, d, B, gamma, delta, lambda1, spectrum_csv);
        }
    } catch (const tailbench::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
