#include "tailbench/dataio.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "tailbench/rng.hpp"

namespace tailbench {

std::string hex_digest(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

ScaledMatrix minmax_scale(const Eigen::MatrixXd& raw) {
    if (raw.size() == 0) throw degenerate_input("minmax_scale: empty matrix");
    if (!raw.allFinite()) throw degenerate_input("minmax_scale: non-finite entries");
    const double lo = raw.minCoeff();
    const double hi = raw.maxCoeff();
    if (!(hi > lo)) throw degenerate_input("minmax_scale: constant matrix (max == min)");
    ScaledMatrix out;
    out.A = (raw.array() - lo) / (hi - lo);
    out.scale_min = lo;
    out.scale_max = hi;
    return out;
}

RawData gen_gaussian_synthetic(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    if (n < 1 || d < 1) throw config_error("gen_gaussian_synthetic: n and d must be >= 1");
    Rng rng = make_rng(seed);
    RawData out;
    out.raw = gaussian_matrix(n, d, rng);
    const double s3 = std::sqrt(3.0);
    Eigen::VectorXd hidden = s3 * gaussian_vector(d, rng);
    out.b = out.raw * hidden + s3 * gaussian_vector(n, rng);
    out.assumption_warning = (n <= d);
    return out;
}

Eigen::MatrixXd random_features(const Eigen::MatrixXd& Y, Eigen::Index d, std::uint64_t seed,
                                double rescale) {
    if (d < 1) throw config_error("random_features: d must be >= 1");
    if (Y.cols() < 1) throw config_error("random_features: input has no columns");
    Rng rng = make_rng(seed);
    Eigen::MatrixXd W = gaussian_matrix(Y.cols(), d, rng);
    Eigen::MatrixXd Z = (Y * W) / std::sqrt(static_cast<double>(Y.cols()));
    return rescale * Z.array().max(0.0);
}

namespace {

bool parse_number(const std::string& tok, double& out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    if (end == s) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

RawData load_csv(const std::string& path, Eigen::Index response_column) {
    std::ifstream in(path);
    if (!in) throw parse_error("load_csv: cannot open file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    bool header_checked = false;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        std::vector<double> vals(fields.size());
        bool all_numeric = true;
        long bad_col = -1;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!parse_number(fields[j], vals[j])) {
                all_numeric = false;
                bad_col = static_cast<long>(j);
                break;
            }
        }
        if (!header_checked) {
            header_checked = true;
            if (!all_numeric) continue;  // header row
        }
        if (!all_numeric) {
            std::ostringstream msg;
            msg << "load_csv: non-numeric cell at row " << lineno << ", column " << bad_col;
            throw parse_error(msg.str(), lineno, bad_col);
        }
        if (width == 0) {
            width = vals.size();
        } else if (vals.size() != width) {
            std::ostringstream msg;
            msg << "load_csv: ragged row " << lineno << ": expected " << width << " fields, got "
                << vals.size();
            throw parse_error(msg.str(), lineno);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw parse_error("load_csv: no data rows in " + path);
    if (response_column < 0 || static_cast<std::size_t>(response_column) >= width) {
        std::ostringstream msg;
        msg << "load_csv: response column " << response_column << " out of range (width " << width
            << ")";
        throw parse_error(msg.str());
    }

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = static_cast<Eigen::Index>(width) - 1;
    if (d < 1) throw parse_error("load_csv: need at least one feature column");
    RawData out;
    out.raw.resize(n, d);
    out.b.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(width); ++j) {
            if (j == response_column)
                out.b[i] = rows[i][j];
            else
                out.raw(i, k++) = rows[i][j];
        }
    }
    out.assumption_warning = (n <= d);
    return out;
}

Dataset make_dataset(const RawData& raw, const DatasetOptions& opts) {
    if (raw.raw.rows() != raw.b.size())
        throw config_error("make_dataset: row count of data and response differ");
    if (!raw.b.allFinite()) throw degenerate_input("make_dataset: non-finite response entries");
    ScaledMatrix scaled = minmax_scale(raw.raw);
    Dataset ds;
    ds.A = std::move(scaled.A);
    ds.n = ds.A.rows();
    ds.d = ds.A.cols();
    ds.scale_min = scaled.scale_min;
    ds.scale_max = scaled.scale_max;
    if (opts.scale_response)
        ds.b = (raw.b.array() - scaled.scale_min) / (scaled.scale_max - scaled.scale_min);
    else
        ds.b = raw.b;
    return ds;
}

Spectrum spectral(const Dataset& ds, double delta) {
    if (ds.n < 1 || ds.d < 1) throw config_error("spectral: empty dataset");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(ds.A, Eigen::ComputeThinU | Eigen::ComputeThinV);

    Spectrum spec;
    spec.P = svd.matrixU();
    spec.Q = svd.matrixV();
    spec.sigma = svd.singularValues();

    // Resolve the SVD sign ambiguity: first entry of each right singular
    // vector with magnitude above tolerance is made positive.
    for (Eigen::Index j = 0; j < spec.Q.cols(); ++j) {
        for (Eigen::Index i = 0; i < spec.Q.rows(); ++i) {
            if (std::abs(spec.Q(i, j)) > 1e-12) {
                if (spec.Q(i, j) < 0) {
                    spec.Q.col(j) = -spec.Q.col(j);
                    spec.P.col(j) = -spec.P.col(j);
                }
                break;
            }
        }
    }

    if (spec.sigma.size() < ds.d) {
        std::ostringstream msg;
        msg << "spectral: design matrix has rank at most " << spec.sigma.size() << " < d = "
            << ds.d << " (need n >= d with strictly positive singular values)";
        throw assumption_violation(msg.str());
    }
    const double lambda1 = spec.sigma[0];
    for (Eigen::Index i = 0; i < ds.d; ++i) {
        if (!(spec.sigma[i] > 1e-10 * lambda1)) {
            std::ostringstream msg;
            msg << "spectral: rank-deficient design matrix, singular value " << (i + 1) << " is "
                << spec.sigma[i] << " (largest " << lambda1 << ")";
            throw assumption_violation(msg.str());
        }
    }

    spec.x_star = spec.Q * (spec.P.transpose() * ds.b).cwiseQuotient(spec.sigma);

    // Drift target of the reduced coordinates. Writing the full-gradient flow
    // in the rotated frame centered at x_star gives
    //   dY_i = -gamma [ (lambda_i^2/n + delta) Y_i + delta (Q^T x_star)_i ] dt + ...,
    // so alpha_i = -delta (Q^T x_star)_i; the regularized stationary center is
    // shifted off x_star only through the ridge term, and alpha vanishes at
    // delta = 0.
    Eigen::VectorXd qx = spec.Q.transpose() * spec.x_star;
    spec.alpha = -delta * qx;

    // beta is the squared norm of the out-of-column-space part of b; the sign
    // convention keeps the diffusion coefficient below the square root real.
    Eigen::VectorXd resid = ds.b - spec.P * (spec.P.transpose() * ds.b);
    spec.beta = resid.squaredNorm();
    if (!(spec.beta > 1e-12 * ds.b.squaredNorm()))
        throw assumption_violation("spectral: response lies in the column space of A (beta == 0)");

    spec.trace_AtA = spec.sigma.squaredNorm();
    return spec;
}

Eigen::VectorXd ridge_minimizer(const Dataset& ds, double delta) {
    const double n = static_cast<double>(ds.n);
    Eigen::MatrixXd M = ds.A.transpose() * ds.A;
    M.diagonal().array() += n * delta;
    return M.ldlt().solve(ds.A.transpose() * ds.b);
}

std::uint64_t dataset_digest(const Dataset& ds) {
    std::uint64_t h = fnv1a64(ds.A.data(), sizeof(double) * ds.A.size());
    h = fnv1a64(ds.b.data(), sizeof(double) * ds.b.size(), h);
    return h;
}

std::string spectrum_report_json(const Dataset& ds, const Spectrum& spec) {
    nlohmann::ordered_json j;
    j["n"] = ds.n;
    j["d"] = ds.d;
    j["lambda"] = std::vector<double>(spec.sigma.data(), spec.sigma.data() + spec.sigma.size());
    j["beta"] = spec.beta;
    j["x_star"] = std::vector<double>(spec.x_star.data(), spec.x_star.data() + spec.x_star.size());
    j["trace_AtA"] = spec.trace_AtA;
    return j.dump(2) + "\n";
}

}  // namespace tailbench
