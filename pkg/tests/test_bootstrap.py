import numpy as np
import numpy.testing as npt
import pytest

from sparsevar import bootstrap, pipeline
from sparsevar.bootstrap import (ThresholdedModel, generate, run,
                                 sigma_eps_hat, threshold_model,
                                 threshold_sigma)
from sparsevar.design import build
from sparsevar.errors import InvalidModelError, UnstableModelError
from sparsevar.lasso import LassoConfig
from sparsevar.pipeline import PipelineConfig, estimate
from sparsevar.varmodel import VarModel, population_autocov, simulate


def test_threshold_model_rules():
    a_init = np.array([[[0.10, 0.12], [0.50, 0.005]]])
    a_de = np.array([[[0.13, 0.13], [0.48, 0.2]]])
    out = threshold_model(a_init, a_de, a_n=0.11)
    # |init| below the cut -> 0; at or above -> de-biased value
    npt.assert_array_equal(out, [[[0.0, 0.13], [0.48, 0.0]]])
    npt.assert_array_equal(threshold_model(a_init, a_de, 0.0), a_de)
    npt.assert_array_equal(threshold_model(a_init, a_de, 0.51),
                           np.zeros((1, 2, 2)))


def test_threshold_model_support_rule():
    gen = np.random.default_rng(0)
    a_init = gen.normal(size=(2, 4, 4))
    a_de = gen.normal(size=(2, 4, 4))
    a_n = 0.4
    out = threshold_model(a_init, a_de, a_n)
    support = out != 0
    assert (np.abs(a_init)[support] >= a_n).all()
    npt.assert_array_equal(out[support], a_de[support])
    assert (out[np.abs(a_init) < a_n] == 0).all()


def test_threshold_model_guards():
    with pytest.raises(ValueError):
        threshold_model(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), -0.1)
    with pytest.raises(Exception):
        threshold_model(np.zeros((1, 2, 2)), np.zeros((1, 3, 3)), 0.1)


def test_sigma_eps_hat_zero_coefficients(example1_design):
    out = sigma_eps_hat(example1_design, np.zeros((1, 6, 6)))
    resp = example1_design.responses
    npt.assert_allclose(out, resp.T @ resp / example1_design.m, atol=1e-12)


def test_sigma_eps_hat_perfect_fit_noiseless():
    a = np.array([[0.9, 0.2], [-0.3, 0.7]])
    x = np.empty((40, 2))
    x[0] = [1.0, -0.5]
    for t in range(1, 40):
        x[t] = a @ x[t - 1]
    des = build(x, d=1)
    out = sigma_eps_hat(des, a[None])
    npt.assert_allclose(out, np.zeros((2, 2)), atol=1e-12)


def test_sigma_eps_hat_recovers_sigma(example1):
    ts = simulate(example1, n=10 ** 4, seed=21)
    des = build(ts, d=1)
    out = sigma_eps_hat(des, example1.coeffs)
    assert np.abs(out - example1.sigma_eps).max() < 0.05


def test_threshold_sigma_example1_pattern(example1):
    out = threshold_sigma(example1.sigma_eps, lambda_eps=0.11)
    first_row = example1.sigma_eps[0, 1:]
    kept = out[0, 1:]
    # 0.25, 0.17, 0.12 survive; 0.10 and 0.08 are zeroed
    npt.assert_array_equal(kept[:3], first_row[:3])
    npt.assert_array_equal(kept[3:], [0.0, 0.0])
    npt.assert_array_equal(np.diag(out), np.ones(6))


def test_threshold_sigma_extremes():
    s = np.array([[2.0, 0.3], [0.3, 1.0]])
    npt.assert_array_equal(threshold_sigma(s, 0.0), s)
    out = threshold_sigma(s, 0.5)
    npt.assert_array_equal(out, np.diag([2.0, 1.0]))


def test_threshold_sigma_psd_repair():
    # valid covariance whose thresholded version is indefinite
    s = np.array([[1.0, 0.9, 0.09],
                  [0.9, 1.0, -0.5],
                  [0.09, -0.5, 1.0]])
    s = s @ s.T  # make it PSD; off-diagonals stay mixed
    raw = np.where(np.abs(s) >= np.abs(s[0, 1]), s, 0.0)
    np.fill_diagonal(raw, np.diag(s))
    out = threshold_sigma(s, float(np.abs(s[0, 1])))
    wmin = np.linalg.eigvalsh(out).min()
    assert wmin >= 1e-8 - 1e-12
    if np.linalg.eigvalsh(raw).min() >= 1e-8:
        npt.assert_allclose(out, raw, atol=1e-12)
    else:
        # repair adds a multiple of the identity, nothing else
        npt.assert_allclose(out - np.diag(np.diag(out)),
                            raw - np.diag(np.diag(raw)), atol=1e-12)


def test_threshold_sigma_rejects_asymmetric():
    with pytest.raises(InvalidModelError):
        threshold_sigma(np.array([[1.0, 0.2], [0.0, 1.0]]), 0.1)


def _fitted_example1(example1, n=100, seed=3, lam=0.11):
    ts = simulate(example1, n=n, seed=seed)
    cfg = PipelineConfig(d=1, lam=lam, lambda_eps=lam)
    return estimate(ts, cfg), cfg


def test_generate_zero_covariance(example1):
    fit, _ = _fitted_example1(example1)
    model_thr = ThresholdedModel(a_thr=fit.a_thr,
                                 sigma_thr=np.zeros((6, 6)),
                                 a_n=0.11, lambda_eps=0.11)
    ts = generate(model_thr, n=50, seed=5)
    npt.assert_array_equal(ts.values, np.zeros((50, 6)))


def test_generate_deterministic(example1):
    fit, _ = _fitted_example1(example1)
    a = generate(fit.model_thr, n=80, seed=9)
    b = generate(fit.model_thr, n=80, seed=9)
    npt.assert_array_equal(a.values, b.values)


def test_generate_refuses_unstable():
    model_thr = ThresholdedModel(a_thr=np.array([[[1.02]]]),
                                 sigma_thr=np.eye(1),
                                 a_n=0.1, lambda_eps=0.1)
    with pytest.raises(UnstableModelError):
        generate(model_thr, n=50, seed=0)


def test_generate_matches_thresholded_autocov(example1):
    fit, _ = _fitted_example1(example1, n=200, seed=14)
    model = fit.model_thr.var_model()
    acov = population_autocov(model, h_max=1)
    n = 10 ** 5
    ts = generate(fit.model_thr, n=n, seed=33)
    x = ts.values
    emp1 = x[1:].T @ x[:-1] / (n - 1)
    scale = np.sqrt(np.outer(np.diag(acov.gamma(0)), np.diag(acov.gamma(0))))
    assert (np.abs(emp1 - acov.gamma(1)) < 9.0 * scale / np.sqrt(n)).all()


def test_run_deterministic_and_worker_invariant(example1):
    fit, cfg = _fitted_example1(example1)
    targets = [(1, 1, 1), (3, 3, 1), (6, 6, 1)]
    args = dict(targets=targets, b_draws=60, alpha=0.05, seed=42,
                config=cfg.lasso_config())
    r1 = run(fit.design, fit.fit, fit.model_thr, **args)
    r2 = run(fit.design, fit.fit, fit.model_thr, **args)
    npt.assert_array_equal(r1.stats, r2.stats)
    r3 = run(fit.design, fit.fit, fit.model_thr, workers=3, **args)
    npt.assert_array_equal(r1.stats, r3.stats)
    for a, b in zip(r1.intervals, r3.intervals):
        assert (a.lower, a.upper) == (b.lower, b.upper)


def test_run_interval_arithmetic(example1):
    """Interval endpoints are the observed estimate plus the empirical
    quantiles of the studentised draws, scaled by se / sqrt(n)."""
    fit, cfg = _fitted_example1(example1)
    targets = [(2, 4, 1), (5, 3, 1)]
    r = run(fit.design, fit.fit, fit.model_thr, targets=targets,
            b_draws=150, alpha=0.10, seed=7, config=cfg.lasso_config())
    assert r.stats.shape == (150 - r.rejected, 2)
    sqrt_n = np.sqrt(100)
    for i, ci in enumerate(r.intervals):
        j, rr, s = ci.target
        est = fit.a_de[s - 1, j - 1, rr - 1]
        se = fit.se_hat[s - 1, j - 1, rr - 1]
        q_lo, q_hi = np.quantile(r.stats[:, i], [0.05, 0.95])
        npt.assert_allclose(ci.lower, est + q_lo * se / sqrt_n, rtol=1e-12)
        npt.assert_allclose(ci.upper, est + q_hi * se / sqrt_n, rtol=1e-12)
        assert ci.lower <= ci.upper
        assert ci.level == 0.90
        npt.assert_allclose(ci.estimate, est)


def test_run_all_targets_cardinality(example1):
    fit, cfg = _fitted_example1(example1)
    targets = [(j, r, 1) for j in range(1, 7) for r in range(1, 7)]
    r = run(fit.design, fit.fit, fit.model_thr, targets=targets,
            b_draws=50, alpha=0.05, seed=1, config=cfg.lasso_config())
    assert len(r.intervals) == 36
    assert r.stats.shape[1] == 36


def test_run_refuses_unstable_thresholded_model(example1):
    fit, cfg = _fitted_example1(example1)
    bad = ThresholdedModel(a_thr=np.eye(6)[None] * 1.01,
                           sigma_thr=np.eye(6), a_n=0.11, lambda_eps=0.11)
    with pytest.raises(UnstableModelError):
        run(fit.design, fit.fit, bad, targets=[(1, 1, 1)],
            b_draws=20, alpha=0.05, seed=0, config=cfg.lasso_config())


def test_run_argument_guards(example1):
    fit, cfg = _fitted_example1(example1)
    lcfg = cfg.lasso_config()
    with pytest.raises(ValueError):
        run(fit.design, fit.fit, fit.model_thr, targets=[(1, 1, 1)],
            b_draws=0, alpha=0.05, seed=0, config=lcfg)
    with pytest.raises(ValueError):
        run(fit.design, fit.fit, fit.model_thr, targets=[(1, 1, 1)],
            b_draws=10, alpha=1.5, seed=0, config=lcfg)
    with pytest.raises(ValueError):
        run(fit.design, fit.fit, fit.model_thr, targets=[],
            b_draws=10, alpha=0.05, seed=0, config=lcfg)
    with pytest.raises(IndexError):
        run(fit.design, fit.fit, fit.model_thr, targets=[(7, 1, 1)],
            b_draws=10, alpha=0.05, seed=0, config=lcfg)


def test_ci_width_shrinks_with_n(example1):
    """Quadrupling the sample roughly halves the median interval width."""
    widths = {}
    for n in (150, 600):
        ts = simulate(example1, n=n, seed=55)
        cfg = PipelineConfig(d=1, lam=0.11 * np.sqrt(150 / n),
                             lambda_eps=0.11)
        fit = estimate(ts, cfg)
        targets = [(j, r, 1) for j in range(1, 7) for r in range(1, 7)]
        r = run(fit.design, fit.fit, fit.model_thr, targets=targets,
                b_draws=200, alpha=0.05, seed=77,
                config=cfg.lasso_config())
        widths[n] = np.median([ci.upper - ci.lower for ci in r.intervals])
    ratio = widths[150] / widths[600]
    assert 2.0 * 0.85 <= ratio <= 2.0 * 1.15


def test_thresholded_model_var_model_round_trip(example1):
    fit, _ = _fitted_example1(example1)
    model = fit.model_thr.var_model()
    npt.assert_array_equal(model.coeffs, fit.a_thr)
    npt.assert_array_equal(model.sigma_eps, fit.sigma_thr)
