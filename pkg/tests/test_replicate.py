"""Monte-Carlo study harness: determinism, worker invariance, counting."""

import numpy as np
import pytest
from scipy.stats import norm

from conftest import random_stable_model
from sparsevar import bootstrap, design, examples, pipeline, replicate, rng, testing
from sparsevar.errors import DegenerateDesignError, UnstableModelError
from sparsevar.varmodel import VarModel, simulate


@pytest.fixture(scope="module")
def small_model():
    return random_stable_model(np.random.default_rng(3), p=2, d=1, radius=0.6)


@pytest.fixture(scope="module")
def small_config():
    return pipeline.PipelineConfig(d=1, lam=0.15, lambda_eps=0.15)


def test_coverage_study_matches_manual_loop(small_model, small_config):
    n, n_mc, b_draws, seed = 50, 3, 16, 21
    levels = (0.80, 0.95)
    study = replicate.run_coverage_study(
        small_model, n=n, n_mc=n_mc, b_draws=b_draws, config=small_config,
        seed=seed, levels=levels,
    )
    assert study.kept == n_mc and study.trial_rejections == 0

    p = small_model.p
    targets = [(j, r, 1) for j in range(1, p + 1) for r in range(1, p + 1)]
    truth = np.array([small_model.coeffs[0, j - 1, r - 1] for (j, r, _) in targets])
    boot_hits = np.zeros((2, len(targets)))
    asym_hits = np.zeros_like(boot_hits)
    rep_rejected = 0
    for i in range(n_mc):
        ts = simulate(small_model, n, seed=rng.child_seed(seed, rng.STREAM_DATA, i))
        fit = pipeline.estimate(ts, small_config)
        run = bootstrap.run(
            fit.design, fit.fit, fit.model_thr, targets,
            b_draws=b_draws, alpha=1.0 - max(levels),
            seed=rng.child_seed(seed, rng.STREAM_TRIAL, i),
            config=small_config.lasso_config(),
            nodewise_config=small_config.nodewise_config(),
        )
        rep_rejected += run.rejected
        est = np.array([fit.a_de[0, j - 1, r - 1] for (j, r, _) in targets])
        se = np.array([fit.se_hat[0, j - 1, r - 1] for (j, r, _) in targets])
        for l, lev in enumerate(levels):
            a = 1.0 - lev
            q_lo, q_hi = np.quantile(run.stats, [a / 2, 1 - a / 2], axis=0)
            lo = est + q_lo * se / np.sqrt(n)
            hi = est + q_hi * se / np.sqrt(n)
            boot_hits[l] += (lo <= truth) & (truth <= hi)
            asym_hits[l] += np.abs(est - truth) <= norm.ppf(1 - a / 2) * se / np.sqrt(n)
    np.testing.assert_array_equal(
        study.bootstrap.reshape(2, -1), boot_hits / n_mc)
    np.testing.assert_array_equal(
        study.asymptotic.reshape(2, -1), asym_hits / n_mc)
    assert study.replicate_rejections == rep_rejected


def test_coverage_study_worker_invariance(small_model, small_config):
    kwargs = dict(n=40, n_mc=5, b_draws=12, config=small_config, seed=7)
    one = replicate.run_coverage_study(small_model, workers=1, **kwargs)
    two = replicate.run_coverage_study(small_model, workers=2, **kwargs)
    np.testing.assert_array_equal(one.bootstrap, two.bootstrap)
    np.testing.assert_array_equal(one.asymptotic, two.asymptotic)
    assert one.kept == two.kept
    assert one.trial_rejections == two.trial_rejections
    assert one.replicate_rejections == two.replicate_rejections


def test_coverage_matrix_selects_level_and_method(small_model, small_config):
    study = replicate.run_coverage_study(
        small_model, n=40, n_mc=2, b_draws=10, config=small_config, seed=1,
        levels=(0.5, 0.9),
    )
    np.testing.assert_array_equal(study.matrix(0.9, "bootstrap"),
                                  study.bootstrap[1, 0])
    np.testing.assert_array_equal(study.matrix(0.5, "asymptotic"),
                                  study.asymptotic[0, 0])
    # wider level never covers less often
    assert (study.matrix(0.9, "bootstrap") >= study.matrix(0.5, "bootstrap")).all()
    with pytest.raises(ValueError):
        study.matrix(0.75, "bootstrap")


def test_coverage_study_validation(small_model, small_config):
    with pytest.raises(ValueError, match="trial"):
        replicate.run_coverage_study(small_model, n=40, n_mc=0, b_draws=5,
                                     config=small_config, seed=0)
    with pytest.raises(ValueError, match="levels"):
        replicate.run_coverage_study(small_model, n=40, n_mc=1, b_draws=5,
                                     config=small_config, seed=0, levels=(1.5,))


def test_all_trials_rejected_raises(small_config):
    # zero innovation variance gives an identically-zero series, so every
    # trial hits a degenerate design and is dropped
    dead = VarModel(np.array([[[0.5]]]), np.array([[0.0]]))
    with pytest.raises(UnstableModelError, match="every Monte-Carlo trial"):
        replicate.run_test_study(
            dead, testing.GroupSpec(a_entries=((1, 1, 1),)), n=30, n_mc=3,
            b_draws=10, config=pipeline.PipelineConfig(d=1, lam=0.1), seed=0,
        )


def test_test_study_matches_manual_loop():
    model = examples.example1_test_model(0.7, 0.0)
    group = examples.example1_group()
    config = pipeline.PipelineConfig(d=1, lam=0.11, lambda_eps=0.11)
    n, n_mc, b_draws, seed = 60, 4, 19, 5
    alphas = (0.05, 0.10)
    study = replicate.run_test_study(
        model, group, n=n, n_mc=n_mc, b_draws=b_draws, config=config,
        seed=seed, alphas=alphas,
    )
    counts = np.zeros(2)
    kept = 0
    for i in range(n_mc):
        ts = simulate(model, n, seed=rng.child_seed(seed, rng.STREAM_DATA, i))
        try:
            res = testing.bootstrap_test(
                design.build(ts, 1), config, group, b_draws=b_draws,
                alpha=alphas[0], seed=rng.child_seed(seed, rng.STREAM_TRIAL, i),
            )
        except (UnstableModelError, DegenerateDesignError):
            continue
        kept += 1
        for k, a in enumerate(alphas):
            counts[k] += res.statistic > np.quantile(res.null_stats, 1 - a)
    assert study.kept == kept
    np.testing.assert_array_equal(study.rejection_rates, counts / kept)
    # rejection can only grow as alpha grows
    assert study.rejection_rates[1] >= study.rejection_rates[0]


def test_test_study_worker_invariance():
    model = examples.example1_model()
    group = examples.example1_group()
    config = pipeline.PipelineConfig(d=1, lam=0.11, lambda_eps=0.11)
    kwargs = dict(n=50, n_mc=5, b_draws=12, config=config, seed=3,
                  alphas=(0.05, 0.10))
    one = replicate.run_test_study(model, group, workers=1, **kwargs)
    three = replicate.run_test_study(model, group, workers=3, **kwargs)
    np.testing.assert_array_equal(one.rejection_rates, three.rejection_rates)
    assert one.kept == three.kept
    assert one.replicate_rejections == three.replicate_rejections


def test_test_study_validation(small_model, small_config):
    group = testing.GroupSpec(a_entries=((1, 1, 1),))
    with pytest.raises(ValueError, match="alphas"):
        replicate.run_test_study(small_model, group, n=40, n_mc=1, b_draws=5,
                                 config=small_config, seed=0, alphas=(0.0,))
    with pytest.raises(IndexError):
        replicate.run_test_study(
            small_model, testing.GroupSpec(a_entries=((5, 1, 1),)),
            n=40, n_mc=1, b_draws=5, config=small_config, seed=0,
        )


def test_trial_rejections_counted_and_warned():
    # near-unit-root scalar model with no thresholding: some fitted models
    # land outside the stability region and those trials must be dropped,
    # counted, and warned about (the drop fraction here is far above 5%)
    model = VarModel(np.array([[[0.985]]]), np.array([[1.0]]))
    config = pipeline.PipelineConfig(d=1, lam=1e-6, a_n=1e-12, lambda_eps=0.1)
    n_mc = 12
    with pytest.warns(RuntimeWarning, match="rejected"):
        study = replicate.run_coverage_study(
            model, n=12, n_mc=n_mc, b_draws=8, config=config, seed=2,
        )
    assert study.trial_rejections > 0
    assert study.kept + study.trial_rejections == n_mc
    assert np.isfinite(study.bootstrap).all()
