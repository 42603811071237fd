// Regenerates src/stable_tables.inc: Monte-Carlo quantile ratios of the CMS
// sampler on an (alpha, beta) grid. Usage: gen_stable_tables [draws] > stable_tables.inc
#include <algorithm>
#include <cstdio>
#include <vector>

#include "tailbench/rng.hpp"
#include "tailbench/stats.hpp"

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
    const double h = p * (static_cast<double>(s.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(h);
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - lo) * (s[hi] - s[lo]);
}

}  // namespace

int main(int argc, char** argv) {
    const long draws = argc > 1 ? std::atol(argv[1]) : 4000000;
    const std::vector<double> alphas = {0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3,
                                        1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0};
    const std::vector<double> betas = {0.0, 0.25, 0.5, 0.75, 1.0};

    const std::size_t na = alphas.size(), nb = betas.size();
    std::vector<std::vector<double>> nu_alpha(nb, std::vector<double>(na));
    std::vector<std::vector<double>> nu_beta(nb, std::vector<double>(na));
    std::vector<std::vector<double>> nu_c(nb, std::vector<double>(na));
    std::vector<std::vector<double>> nu_zeta(nb, std::vector<double>(na));

    for (std::size_t ib = 0; ib < nb; ++ib) {
        for (std::size_t ia = 0; ia < na; ++ia) {
            tailbench::Rng rng =
                tailbench::make_rng(tailbench::derive_seed(0x57ab1e5ull, ib * na + ia));
            Eigen::VectorXd s =
                tailbench::stable_sample_cms(alphas[ia], betas[ib], 1.0, 0.0, draws, rng);
            std::vector<double> v(s.data(), s.data() + s.size());
            std::sort(v.begin(), v.end());
            const double q05 = quantile_sorted(v, 0.05), q25 = quantile_sorted(v, 0.25),
                         q50 = quantile_sorted(v, 0.50), q75 = quantile_sorted(v, 0.75),
                         q95 = quantile_sorted(v, 0.95);
            nu_alpha[ib][ia] = (q95 - q05) / (q75 - q25);
            // beta = 0 is symmetric by construction
            nu_beta[ib][ia] = ib == 0 ? 0.0 : (q95 + q05 - 2.0 * q50) / (q95 - q05);
            nu_c[ib][ia] = q75 - q25;
            nu_zeta[ib][ia] = ib == 0 ? 0.0 : q50;
        }
        std::fprintf(stderr, "beta %.2f done\n", betas[ib]);
    }

    auto emit = [&](const char* name, const std::vector<std::vector<double>>& t) {
        std::printf("constexpr double %s[kBetaCount][kAlphaCount] = {\n", name);
        for (std::size_t ib = 0; ib < nb; ++ib) {
            std::printf("    {");
            for (std::size_t ia = 0; ia < na; ++ia)
                std::printf("%.6f%s", t[ib][ia], ia + 1 < na ? ", " : "");
            std::printf("}%s\n", ib + 1 < nb ? "," : "");
        }
        std::printf("};\n");
    };

    std::printf(
        "// Quantile-ratio lookup tables for the stable quantile estimator, indexed\n"
        "// [beta][alpha]. Monte-Carlo quantiles of the CMS sampler, %ld draws per grid\n"
        "// point; regenerate with tools/gen_stable_tables.\n",
        draws);
    std::printf("constexpr int kAlphaCount = %zu;\n", na);
    std::printf("constexpr int kBetaCount = %zu;\n", nb);
    std::printf("constexpr double kAlphaGrid[kAlphaCount] = {");
    for (std::size_t ia = 0; ia < na; ++ia)
        std::printf("%.2f%s", alphas[ia], ia + 1 < na ? ", " : "");
    std::printf("};\n");
    std::printf("constexpr double kBetaGrid[kBetaCount] = {");
    for (std::size_t ib = 0; ib < nb; ++ib)
        std::printf("%.2f%s", betas[ib], ib + 1 < nb ? ", " : "");
    std::printf("};\n");
    emit("kNuAlpha", nu_alpha);
    emit("kNuBeta", nu_beta);
    emit("kNuC", nu_c);
    emit("kNuZeta", nu_zeta);
    return 0;
}
