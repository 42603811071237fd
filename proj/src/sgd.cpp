#include "tailbench/sgd.hpp"

#include <atomic>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace tailbench {

Eigen::VectorXd InitSampler::sample(Eigen::Index d, Rng& rng) const {
    switch (kind) {
        case Kind::zero:
            return Eigen::VectorXd::Zero(d);
        case Kind::uniform_box: {
            std::uniform_real_distribution<double> u(-scale, scale);
            Eigen::VectorXd v(d);
            for (Eigen::Index i = 0; i < d; ++i) v[i] = u(rng);
            return v;
        }
        case Kind::gaussian:
        default:
            return scale * gaussian_vector(d, rng);
    }
}

std::vector<int> sample_batch(Eigen::Index n, int B, Rng& rng) {
    std::uniform_int_distribution<int> u(0, static_cast<int>(n) - 1);
    std::vector<int> batch(B);
    for (int j = 0; j < B; ++j) batch[j] = u(rng);
    return batch;
}

Eigen::VectorXd minibatch_gradient(const Dataset& ds, const Eigen::VectorXd& x,
                                   const std::vector<int>& batch, double delta) {
    Eigen::VectorXd g = delta * x;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (int i : batch) {
        const double r = ds.A.row(i).dot(x) - ds.b[i];
        g.noalias() += (inv_b * r) * ds.A.row(i).transpose();
    }
    return g;
}

namespace {

// Hot loop over a pre-transposed design matrix so each data point is a
// contiguous column.
SgdResult sgd_run_core(const Eigen::MatrixXd& At, const Eigen::VectorXd& b, Eigen::Index n,
                       const OptimConfig& cfg, const Eigen::VectorXd& x0, Rng& rng,
                       const SgdOptions& opts) {
    SgdResult res;
    Eigen::VectorXd x = x0;
    const Eigen::Index d = At.rows();
    if (opts.record_trajectory) {
        res.trajectory.emplace(cfg.K + 1, d);
        res.trajectory->row(0) = x.transpose();
    }

    std::uniform_int_distribution<int> u(0, static_cast<int>(n) - 1);
    const double inv_b = 1.0 / cfg.B;
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd g(d);

    for (int k = 0; k < cfg.K; ++k) {
        if (opts.full_batch) {
            Eigen::VectorXd resid = At.transpose() * x - b;
            g.noalias() = inv_n * (At * resid);
            g.noalias() += cfg.delta * x;
            x.noalias() -= cfg.gamma * g;
        } else if (cfg.B == 1) {
            const int i = u(rng);
            const double r = At.col(i).dot(x) - b[i];
            if (cfg.delta != 0.0) x *= (1.0 - cfg.gamma * cfg.delta);
            x.noalias() -= (cfg.gamma * r) * At.col(i);
        } else {
            g.setZero();
            for (int j = 0; j < cfg.B; ++j) {
                const int i = u(rng);
                const double r = At.col(i).dot(x) - b[i];
                g.noalias() += (inv_b * r) * At.col(i);
            }
            if (cfg.delta != 0.0) g.noalias() += cfg.delta * x;
            x.noalias() -= cfg.gamma * g;
        }

        if (opts.divergence_guard && x.norm() > opts.guard_threshold) {
            res.diverged = true;
            res.diverged_at = k;
            break;
        }
        if (opts.record_trajectory) res.trajectory->row(k + 1) = x.transpose();
    }
    res.x_final = std::move(x);
    return res;
}

}  // namespace

SgdResult sgd_run(const Dataset& ds, const OptimConfig& cfg, const Eigen::VectorXd& x0, Rng& rng,
                  const SgdOptions& opts) {
    cfg.validate();
    if (cfg.B > ds.n) throw config_error("sgd_run: batch size exceeds the sample count");
    if (x0.size() != ds.d) throw config_error("sgd_run: x0 dimension mismatch");
    if (!x0.allFinite()) throw config_error("sgd_run: x0 must be finite");
    Eigen::MatrixXd At = ds.A.transpose();
    return sgd_run_core(At, ds.b, ds.n, cfg, x0, rng, opts);
}

Eigen::MatrixXd gradient_noise_covariance(const Dataset& ds, const Eigen::VectorXd& x, int B) {
    if (B < 1) throw config_error("gradient_noise_covariance: B must be >= 1");
    const double dn = static_cast<double>(ds.n);

    Eigen::VectorXd resid = ds.A * x - ds.b;           // r_i = a_i . x - b_i
    Eigen::MatrixXd scaled = resid.asDiagonal() * ds.A;  // rows r_i a_i^T

    // (1/n) sum_i grad L_i grad L_i^T = (1/n) sum_i r_i^2 a_i a_i^T
    Eigen::MatrixXd second_moment = (scaled.transpose() * scaled) / dn;
    Eigen::VectorXd full_grad = ds.A.transpose() * resid;  // grad L(x)

    Eigen::MatrixXd C = (second_moment - (full_grad * full_grad.transpose()) / (dn * dn)) / B;
    return 0.5 * (C + C.transpose());  // symmetrize round-off
}

int resolve_workers(int requested) {
    int w = requested;
    if (w <= 0) {
        if (const char* env = std::getenv("TAILBENCH_WORKERS")) w = std::atoi(env);
    }
    if (w <= 0) w = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, w);
}

Ensemble run_ensemble(const Dataset& ds, const Spectrum& spec, const OptimConfig& cfg,
                      const InitSampler& init, const SgdOptions& opts, int workers) {
    cfg.validate();
    if (cfg.B > ds.n) throw config_error("run_ensemble: batch size exceeds the sample count");
    const int R = cfg.replicas;
    Ensemble ens;
    ens.config = cfg;
    ens.dataset_digest = dataset_digest(ds);
    ens.finals.resize(R, ds.d);
    ens.projected.resize(R);

    Eigen::MatrixXd At = ds.A.transpose();
    Eigen::VectorXd q1 = spec.Q.col(0);
    std::vector<char> diverged(R, 0);

    auto run_replica = [&](int r) {
        Rng rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd x0 = init.sample(ds.d, rng);
        SgdResult res = sgd_run_core(At, ds.b, ds.n, cfg, x0, rng, opts);
        ens.finals.row(r) = res.x_final.transpose();
        ens.projected[r] = q1.dot(res.x_final);
        if (res.diverged || !res.x_final.allFinite()) diverged[r] = 1;
    };

    const int nworkers = std::min(resolve_workers(workers), R);
    if (nworkers <= 1) {
        for (int r = 0; r < R; ++r) run_replica(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nworkers);
        for (int t = 0; t < nworkers; ++t) {
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) run_replica(r);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (int r = 0; r < R; ++r)
        if (diverged[r]) ens.divergent.push_back(r);
    return ens;
}

ProjectedSamples project_dominant(const Ensemble& ens, const Spectrum& spec) {
    if (ens.finals.cols() != spec.Q.rows())
        throw config_error("project_dominant: ensemble/spectrum dimension mismatch");
    ProjectedSamples out;
    out.y = ens.finals * spec.Q.col(0);
    out.z = out.y.array() - out.y.mean();
    return out;
}

}  // namespace tailbench
