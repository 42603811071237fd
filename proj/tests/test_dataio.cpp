#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tailbench/dataio.hpp"
#include "tailbench/rng.hpp"

using namespace tailbench;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

Dataset small_dataset() {
    RawData raw;
    raw.raw.resize(3, 2);
    raw.raw << 2.0, 0.0, 0.0, 1.0, 0.0, 0.0;
    raw.b.resize(3);
    raw.b << 2.0, 1.0, 1.0;
    Dataset ds;
    ds.A = raw.raw;  // already in [0, 2]; build without rescaling for hand checks
    ds.b = raw.b;
    ds.n = 3;
    ds.d = 2;
    ds.scale_min = 0.0;
    ds.scale_max = 2.0;
    return ds;
}

}  // namespace

TEST_CASE("minmax_scale maps onto [0,1] with both endpoints attained") {
    Eigen::MatrixXd raw(2, 2);
    raw << 0.0, 2.0, 4.0, 2.0;
    auto s = minmax_scale(raw);
    Eigen::MatrixXd expect(2, 2);
    expect << 0.0, 0.5, 1.0, 0.5;
    CHECK((s.A - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.scale_min == 0.0);
    CHECK(s.scale_max == 4.0);
}

TEST_CASE("minmax_scale is the identity on data already spanning [0,1]") {
    Eigen::MatrixXd raw(2, 2);
    raw << 0.0, 0.3, 1.0, 0.7;
    auto s = minmax_scale(raw);
    CHECK((s.A - raw).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("minmax_scale on gaussian data stays inside the unit interval") {
    Rng rng = make_rng(5);
    Eigen::MatrixXd raw = gaussian_matrix(5, 3, rng);
    auto s = minmax_scale(raw);
    CHECK(s.A.minCoeff() == 0.0);
    CHECK(s.A.maxCoeff() == 1.0);
    CHECK(s.A.minCoeff() >= 0.0);
    CHECK(s.A.maxCoeff() <= 1.0);
}

TEST_CASE("minmax_scale rejects a constant matrix") {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(3, 3, 2.5);
    CHECK_THROWS_AS(minmax_scale(raw), degenerate_input);
}

TEST_CASE("gaussian synthetic data has the right moments and is seed-stable") {
    RawData r = gen_gaussian_synthetic(2000, 200, 123);
    CHECK_FALSE(r.assumption_warning);
    const double mean = r.raw.mean();
    const double var = (r.raw.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);

    RawData again = gen_gaussian_synthetic(2000, 200, 123);
    CHECK((r.raw - again.raw).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.b - again.b).cwiseAbs().maxCoeff() == 0.0);

    RawData other = gen_gaussian_synthetic(2000, 200, 124);
    CHECK((r.raw - other.raw).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gaussian synthetic warns when n <= d") {
    CHECK(gen_gaussian_synthetic(10, 10, 1).assumption_warning);
    CHECK(gen_gaussian_synthetic(10, 20, 1).assumption_warning);
}

TEST_CASE("random features basics") {
    SUBCASE("zero input maps to zero output") {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, 3);
        CHECK(random_features(y, 5, 9).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("output shape is n x d") {
        Rng rng = make_rng(2);
        Eigen::MatrixXd y = gaussian_matrix(1797, 64, rng);
        Eigen::MatrixXd z = random_features(y, 200, 3);
        CHECK(z.rows() == 1797);
        CHECK(z.cols() == 200);
        CHECK(z.minCoeff() >= 0.0);  // rescaled ReLU
    }
    SUBCASE("single row against a hand-applied weight matrix") {
        // sigma(y W / sqrt(n0)) with the generated W recovered from the seed
        Rng rng = make_rng(77);
        Eigen::MatrixXd w = gaussian_matrix(2, 1, rng);
        Eigen::MatrixXd y(1, 2);
        y << 1.0, 0.0;
        Eigen::MatrixXd z = random_features(y, 1, 77, 2.0);
        const double expect = 2.0 * std::max(0.0, (y * w)(0, 0) / std::sqrt(2.0));
        CHECK(z(0, 0) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("csv loading") {
    SUBCASE("structural split of response and features") {
        auto path = write_temp_csv("tb_ok.csv", "1,2,3\n4,5,6\n7,8,9\n");
        RawData r = load_csv(path, 2);
        CHECK(r.raw.rows() == 3);
        CHECK(r.raw.cols() == 2);
        CHECK(r.b[1] == 6.0);
        CHECK(r.raw(2, 0) == 7.0);
    }
    SUBCASE("header rows are auto-detected") {
        auto path = write_temp_csv("tb_header.csv", "x1,x2,label\n1,2,3\n4,5,6\n");
        RawData r = load_csv(path, 2);
        CHECK(r.raw.rows() == 2);
        CHECK(r.b[0] == 3.0);
    }
    SUBCASE("empty file is a parse error") {
        auto path = write_temp_csv("tb_empty.csv", "");
        CHECK_THROWS_AS(load_csv(path, 0), parse_error);
    }
    SUBCASE("missing file is a parse error") {
        CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", 0), parse_error);
    }
    SUBCASE("ragged rows are located") {
        auto path = write_temp_csv("tb_ragged.csv", "1,2,3\n4,5\n");
        try {
            load_csv(path, 0);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.row == 2);
        }
    }
    SUBCASE("non-numeric cells are located") {
        auto path = write_temp_csv("tb_nonnum.csv", "1,2,3\n4,oops,6\n");
        try {
            load_csv(path, 0);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.row == 2);
            CHECK(e.col == 1);
        }
    }
    SUBCASE("response column out of range") {
        auto path = write_temp_csv("tb_col.csv", "1,2\n3,4\n");
        CHECK_THROWS_AS(load_csv(path, 5), parse_error);
    }
}

TEST_CASE("spectral on the identity design rejects b in the column space") {
    Dataset ds;
    ds.A = Eigen::MatrixXd::Identity(2, 2);
    ds.b.resize(2);
    ds.b << 1.0, 1.0;
    ds.n = 2;
    ds.d = 2;
    CHECK_THROWS_AS(spectral(ds, 0.0), assumption_violation);
}

TEST_CASE("spectral hand check on a 3x2 design") {
    Dataset ds = small_dataset();
    Spectrum spec = spectral(ds, 0.0);

    CHECK(spec.sigma[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(spec.sigma[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spec.x_star[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spec.x_star[1] == doctest::Approx(1.0).epsilon(1e-12));

    // beta = ||(I - P P^T) b||^2; the residual here is the third row
    CHECK(spec.beta == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::VectorXd resid = ds.b - spec.P * (spec.P.transpose() * ds.b);
    CHECK(spec.beta == doctest::Approx(resid.squaredNorm()).epsilon(1e-12));
    CHECK(spec.trace_AtA == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("spectral rejects wide designs (n < d)") {
    Dataset ds = make_dataset(gen_gaussian_synthetic(5, 9, 1));
    CHECK_THROWS_AS(spectral(ds, 0.0), assumption_violation);
}

TEST_CASE("spectral rejects rank-deficient designs naming the index") {
    Dataset ds;
    ds.A.resize(3, 2);
    ds.A << 1.0, 1.0, 2.0, 2.0, 3.0, 3.0;  // rank one
    ds.b.resize(3);
    ds.b << 1.0, 0.0, 1.0;
    ds.n = 3;
    ds.d = 2;
    try {
        spectral(ds, 0.0);
        FAIL("expected assumption_violation");
    } catch (const assumption_violation& e) {
        CHECK(std::string(e.what()).find("singular value 2") != std::string::npos);
    }
}

TEST_CASE("spectrum invariants on synthetic data") {
    RawData raw = gen_gaussian_synthetic(300, 40, 17);
    Dataset ds = make_dataset(raw);
    Spectrum spec = spectral(ds, 0.01);

    SUBCASE("orthonormality") {
        const auto I_d = Eigen::MatrixXd::Identity(ds.d, ds.d);
        CHECK((spec.Q.transpose() * spec.Q - I_d).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((spec.P.transpose() * spec.P - I_d).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("reconstruction") {
        Eigen::MatrixXd rec = spec.P * spec.sigma.asDiagonal() * spec.Q.transpose();
        CHECK((ds.A - rec).cwiseAbs().maxCoeff() <= 1e-6 * ds.A.cwiseAbs().maxCoeff());
    }
    SUBCASE("singular values descending, beta positive") {
        for (Eigen::Index i = 1; i < spec.sigma.size(); ++i)
            CHECK(spec.sigma[i] <= spec.sigma[i - 1]);
        CHECK(spec.sigma[spec.sigma.size() - 1] > 0.0);
        CHECK(spec.beta > 0.0);
    }
    SUBCASE("trace identity") {
        CHECK(spec.trace_AtA ==
              doctest::Approx(ds.A.squaredNorm()).epsilon(1e-10));
    }
    SUBCASE("gradient vanishes at the minimizer up to the ridge term") {
        const double delta = 0.01;
        Eigen::VectorXd grad = ds.A.transpose() * (ds.A * spec.x_star - ds.b) /
                                   static_cast<double>(ds.n) +
                               delta * spec.x_star;
        CHECK((grad - delta * spec.x_star).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("sign convention: first nonzero entry of each Q column positive") {
        for (Eigen::Index j = 0; j < spec.Q.cols(); ++j) {
            for (Eigen::Index i = 0; i < spec.Q.rows(); ++i) {
                if (std::abs(spec.Q(i, j)) > 1e-12) {
                    CHECK(spec.Q(i, j) > 0.0);
                    break;
                }
            }
        }
    }
}

TEST_CASE("synthetic 2000x200 top singular value magnitude") {
    RawData raw = gen_gaussian_synthetic(2000, 200, 42);
    Dataset ds = make_dataset(raw);
    Spectrum spec = spectral(ds, 0.0);
    // scaled gaussian data concentrates the top value near 320
    CHECK(spec.sigma[0] > 300.0);
    CHECK(spec.sigma[0] < 340.0);
}

TEST_CASE("ridge minimizer solves the regularized normal equations") {
    RawData raw = gen_gaussian_synthetic(100, 10, 3);
    Dataset ds = make_dataset(raw);
    const double delta = 0.2;
    Eigen::VectorXd xr = ridge_minimizer(ds, delta);
    Eigen::VectorXd grad =
        ds.A.transpose() * (ds.A * xr - ds.b) / static_cast<double>(ds.n) + delta * xr;
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("dataset digest distinguishes datasets and is stable") {
    Dataset a = make_dataset(gen_gaussian_synthetic(50, 5, 1));
    Dataset b = make_dataset(gen_gaussian_synthetic(50, 5, 2));
    CHECK(dataset_digest(a) == dataset_digest(a));
    CHECK(dataset_digest(a) != dataset_digest(b));
}

TEST_CASE("spectrum report json schema") {
    Dataset ds = make_dataset(gen_gaussian_synthetic(60, 6, 8));
    Spectrum spec = spectral(ds, 0.0);
    const std::string j = spectrum_report_json(ds, spec);
    for (const char* key :
         {"\"n\"", "\"d\"", "\"lambda\"", "\"beta\"", "\"x_star\"", "\"trace_AtA\""})
        CHECK(j.find(key) != std::string::npos);
}

TEST_CASE("scale_response option rescales b with the data extrema") {
    RawData raw;
    raw.raw.resize(2, 2);
    raw.raw << 0.0, 2.0, 4.0, 2.0;
    raw.b.resize(2);
    raw.b << 0.0, 4.0;
    DatasetOptions opts;
    opts.scale_response = true;
    Dataset ds = make_dataset(raw, opts);
    CHECK(ds.b[0] == 0.0);
    CHECK(ds.b[1] == 1.0);

    Dataset plain = make_dataset(raw);
    CHECK(plain.b[1] == 4.0);
}
