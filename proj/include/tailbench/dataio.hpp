#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "tailbench/common.hpp"

namespace tailbench {

// Raw ingested data before scaling. `assumption_warning` is set when n <= d,
// where the strict-positivity assumption on the singular values generically fails.
struct RawData {
    Eigen::MatrixXd raw;
    Eigen::VectorXd b;
    bool assumption_warning = false;
};

// Min-max scaled design matrix with response. Immutable after construction.
struct Dataset {
    Eigen::MatrixXd A;       // n x d, entries in [0, 1]
    Eigen::VectorXd b;       // length n
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    double scale_min = 0.0;  // pre-scaling extrema, kept for provenance
    double scale_max = 1.0;
};

// SVD factors of the design matrix plus the derived constants of the reduced
// coordinate system.
struct Spectrum {
    Eigen::MatrixXd P;       // n x d, orthonormal columns
    Eigen::VectorXd sigma;   // singular values, descending
    Eigen::MatrixXd Q;       // d x d orthogonal
    Eigen::VectorXd x_star;  // least-squares minimizer
    Eigen::VectorXd alpha;
    double beta = 0.0;       // squared residual norm ||(I - P P^T) b||^2
    double trace_AtA = 0.0;  // sum of squared singular values
};

struct ScaledMatrix {
    Eigen::MatrixXd A;
    double scale_min;
    double scale_max;
};

// Affine map of the whole array onto [0, 1] using the global min and max.
// Throws degenerate_input when the matrix is constant.
ScaledMatrix minmax_scale(const Eigen::MatrixXd& raw);

// Rows ~ N(0, I_d), hidden regressor ~ N(0, 3 I_d), responses b_i ~ N(row_i . x, 3).
RawData gen_gaussian_synthetic(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

// Random-feature lift: sigma(Y W / sqrt(n0)) with W standard Gaussian n0 x d and
// sigma the ReLU rescaled by `rescale` (default sqrt(2), variance preserving).
Eigen::MatrixXd random_features(const Eigen::MatrixXd& Y, Eigen::Index d, std::uint64_t seed,
                                double rescale = 1.4142135623730951);

// Numeric CSV with optional header row (auto-detected). The designated column
// becomes the response, the remaining columns the raw matrix in order.
RawData load_csv(const std::string& path, Eigen::Index response_column);

struct DatasetOptions {
    bool scale_response = false;  // responses are left unscaled by default
};

// Scale raw data and assemble the Dataset.
Dataset make_dataset(const RawData& raw, const DatasetOptions& opts = {});

// SVD of A with deterministic column signs, minimizer, and the alpha/beta
// constants. Throws assumption_violation on rank deficiency (naming the
// offending index) or when b lies in the column space of A.
Spectrum spectral(const Dataset& ds, double delta);

// Minimizer of the regularized objective, (A^T A + n delta I)^{-1} A^T b.
Eigen::VectorXd ridge_minimizer(const Dataset& ds, double delta);

std::uint64_t dataset_digest(const Dataset& ds);

// Audit export: {n, d, lambda, beta, x_star, trace_AtA} as a JSON string.
std::string spectrum_report_json(const Dataset& ds, const Spectrum& spec);

}  // namespace tailbench
