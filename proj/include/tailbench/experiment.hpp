#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tailbench/common.hpp"
#include "tailbench/dataio.hpp"
#include "tailbench/sgd.hpp"

namespace tailbench {

struct DatasetSpec {
    enum class Kind { synthetic, csv };
    Kind kind = Kind::synthetic;
    long n = 2000;
    long d = 200;
    std::uint64_t seed = 1;
    std::string path;          // csv source
    long response_column = 0;  // 0-based
    bool use_random_features = false;
    long rf_dim = 0;
    std::uint64_t rf_seed = 2;
    double rf_rescale = 1.4142135623730951;
    bool scale_response = false;
    // drop features that are constant across all rows (they break the
    // strict-positivity requirement on the singular values)
    bool drop_constant_columns = false;
};

struct AnalysisSpec {
    double ks_level = 0.05;
    bool fit_stable = true;
    int qq_points = 200;
};

struct SweepSpec {
    std::string param;  // gamma | B | d
    std::vector<double> values;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    OptimConfig optim;
    InitSampler init;
    AnalysisSpec analysis;
    std::optional<SweepSpec> sweep;
    std::string output_dir = "out";
    int workers = 0;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    void validate() const;
};

// Summary of a completed (or partially completed) experiment.
struct ExperimentResult {
    double lambda1 = 0.0;
    double eta_lower = 0.0;
    double eta_upper = 0.0;
    double gamma_bar = 0.0;
    bool valid_lower = false;
    double nu_hat = 0.0;
    double kappa_hat = 0.0;
    bool ks_upper_rejected = false;  // one-sided vs kappa t(eta_upper)
    bool ks_lower_rejected = false;  // one-sided vs kappa t(eta_lower)
    std::vector<std::string> failed_stages;
    std::string output_dir;
};

// Full pipeline: data, spectrum, bounds, ensemble, fits, KS tests, CCDF/QQ
// artifacts, manifest. Stage failures are recorded in the manifest; artifacts
// produced before the failure are kept.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// One bundle per sweep value plus summary.csv and a combined CCDF overlay.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg);

// Aggregated property checks over all modules.
struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
};

enum class VerifyLevel { fast, full };
std::vector<CheckResult> run_verify(VerifyLevel level, std::uint64_t seed = 20240815);
std::string verify_report_json(const std::vector<CheckResult>& checks);

}  // namespace tailbench
