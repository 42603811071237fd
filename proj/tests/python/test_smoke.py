"""Smoke tests for the tailbench extension module.

Cross-checks a few numerical surfaces against scipy where available.
"""

import json
import math

import numpy as np
import pytest

import tailbench as tb

scipy_stats = pytest.importorskip("scipy.stats")


def test_eta_upper_tabulated_values():
    assert tb.eta_upper(2000, 1, 0.0, 0.015, 319.83) == pytest.approx(3.61, abs=0.01)
    assert tb.eta_upper(1797, 1, 0.0, 0.100, 137.07) == pytest.approx(2.91, abs=0.01)
    assert tb.eta_upper(1797, 1, 0.0, 0.200, 93.49) == pytest.approx(3.06, abs=0.01)


def test_bounds_and_gap_identity():
    lambdas = np.array([2.0, 1.0])
    bounds = tb.compute_tail_bounds(4, 1, 0.0, 0.5, lambdas)
    assert bounds.eta_lower == pytest.approx(4.75, abs=1e-12)
    assert bounds.gamma_bar == pytest.approx(1.6, abs=1e-12)
    assert bounds.eta_upper - bounds.eta_lower == pytest.approx(0.25, abs=1e-12)


def test_synthetic_spectrum_invariants():
    raw, b, warn = tb.gen_gaussian_synthetic(300, 30, seed=7)
    assert not warn
    ds = tb.make_dataset(raw, b)
    assert ds.A.min() == 0.0 and ds.A.max() == 1.0
    spec = tb.spectral(ds, 0.0)
    rec = spec.P @ np.diag(spec.sigma) @ spec.Q.T
    assert np.abs(ds.A - rec).max() <= 1e-6 * np.abs(ds.A).max()
    assert spec.beta > 0
    assert np.all(np.diff(spec.sigma) <= 1e-12)
    # numpy svd as an independent oracle for the spectrum
    np_sigma = np.linalg.svd(ds.A, compute_uv=False)
    assert np.allclose(spec.sigma, np_sigma, rtol=1e-8)


def test_t_cdf_against_scipy():
    for nu in (0.8, 3.0, 7.5, 40.0):
        for x in (-4.0, -0.3, 0.0, 1.2, 9.0):
            assert tb.t_cdf(x, nu) == pytest.approx(scipy_stats.t.cdf(x, nu), abs=1e-10)
    assert tb.t_quantile(0.975, 5.0) == pytest.approx(scipy_stats.t.ppf(0.975, 5.0), abs=1e-8)


def test_ks_test_against_scipy():
    rng = np.random.default_rng(3)
    samples = rng.standard_t(4.0, size=500)
    ours = tb.ks_test_t(samples, nu=4.0, kappa=1.0, variant="two_sided")
    ref = scipy_stats.kstest(samples, lambda x: scipy_stats.t.cdf(x, 4.0))
    assert ours["statistic"] == pytest.approx(ref.statistic, abs=1e-12)
    assert ours["p_value"] == pytest.approx(ref.pvalue, abs=5e-3)


def test_ensemble_determinism_and_projection():
    raw, b, _ = tb.gen_gaussian_synthetic(120, 8, seed=1)
    ds = tb.make_dataset(raw, b)
    spec = tb.spectral(ds, 0.0)
    cfg = tb.OptimConfig()
    cfg.gamma = 0.05
    cfg.K = 60
    cfg.replicas = 24
    cfg.seed = 9
    e1 = tb.run_ensemble(ds, spec, cfg)
    e2 = tb.run_ensemble(ds, spec, cfg, workers=2)
    assert np.array_equal(e1.finals, e2.finals)
    y, z = tb.project_dominant(e1, spec)
    assert np.allclose(y, e1.finals @ spec.Q[:, 0])
    assert abs(z.mean()) < 1e-12


def test_pearson_moment_oracle_mean():
    theta, mu, a = 0.9, 0.2, 0.3
    values, divergent = tb.pearson_moment_oracle(theta, mu, a, z0=-0.4, t=1.3, p=2)
    expect = mu + (-0.4 - mu) * math.exp(-theta * 1.3)
    assert values[1] == pytest.approx(expect, abs=1e-9)
    assert not divergent[1]


def test_stable_sampler_alpha2_is_gaussian():
    s = tb.stable_sample_cms(2.0, 0.0, 1.0, 0.0, 200000, seed=5)
    assert s.std() == pytest.approx(math.sqrt(2.0), rel=0.02)
    fit = tb.fit_stable_quantile(s)
    assert fit.alpha >= 1.9


def test_fit_t_mle_recovery():
    rng = np.random.default_rng(11)
    samples = 1.5 * rng.standard_t(6.0, size=30000)
    fit = tb.fit_t_mle(samples)
    assert fit.nu == pytest.approx(6.0, rel=0.15)
    assert fit.kappa == pytest.approx(1.5, rel=0.05)


def test_digits_spectrum_matches_reference(tmp_path):
    sklearn_datasets = pytest.importorskip("sklearn.datasets")
    digits = sklearn_datasets.load_digits()
    csv = tmp_path / "digits.csv"
    table = np.column_stack([digits.data, digits.target])
    np.savetxt(csv, table, delimiter=",", fmt="%g")

    raw, b = tb.load_csv(str(csv), 64)
    keep = raw.max(axis=0) > raw.min(axis=0)
    ds = tb.make_dataset(raw[:, keep], b)
    spec = tb.spectral(ds, 0.0)
    # deterministic dataset: the top singular value is a fixed reference
    assert spec.sigma[0] == pytest.approx(137.07, abs=0.005)
    bounds = tb.compute_tail_bounds(ds.n, 1, 0.0, 0.1, spec.sigma)
    assert bounds.eta_upper == pytest.approx(2.91, abs=0.005)
    assert bounds.eta_lower == pytest.approx(2.48, abs=0.005)
    assert bounds.gamma_bar == pytest.approx(0.133, abs=0.001)


def test_run_experiment_bundle(tmp_path):
    cfg = {
        "dataset": {"type": "synthetic", "n": 200, "d": 10, "seed": 2},
        "optim": {"gamma": 0.05, "B": 1, "K": 100, "replicas": 120, "seed": 4},
        "analysis": {"qq_points": 40},
        "output_dir": str(tmp_path / "exp"),
    }
    res = tb.run_experiment_json(json.dumps(cfg))
    assert res["failed_stages"] == []
    manifest = json.loads((tmp_path / "exp" / "manifest.json").read_text())
    assert "bounds.json" in manifest["artifacts"]
    bounds = json.loads((tmp_path / "exp" / "bounds.json").read_text())
    assert bounds["eta_upper"] >= bounds["eta_lower"]
