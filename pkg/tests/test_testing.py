import numpy as np
import numpy.testing as npt
import pytest

from sparsevar import examples
from sparsevar.design import build
from sparsevar.errors import InvalidModelError, UnstableModelError
from sparsevar.pipeline import PipelineConfig, estimate_design
from sparsevar.testing import (GroupSpec, bootstrap_test, restricted_fit,
                               t_stat, tau2_hat)
from sparsevar.varmodel import simulate


def test_group_spec_normalisation():
    g = GroupSpec(a_entries=((2, 1, 1), (1, 1, 1), (2, 1, 1)),
                  sigma_entries=((3, 1), (1, 3)))
    assert g.a_entries == ((1, 1, 1), (2, 1, 1))
    assert g.sigma_entries == ((1, 3),)


def test_group_spec_rejects_empty_and_diagonal():
    with pytest.raises(ValueError):
        GroupSpec()
    with pytest.raises(ValueError):
        GroupSpec(sigma_entries=((2, 2),))


def test_group_spec_validate_ranges():
    g = GroupSpec(a_entries=((1, 7, 1),))
    with pytest.raises(IndexError):
        g.validate(p=6, d=1)
    g2 = GroupSpec(a_entries=((1, 1, 2),))
    with pytest.raises(IndexError):
        g2.validate(p=6, d=1)
    GroupSpec(a_entries=((6, 6, 1),)).validate(p=6, d=1)


def test_tau2_identity_and_arithmetic():
    assert tau2_hat(np.eye(4), 1, 3) == 1.0
    s = np.eye(2)
    s[0, 1] = s[1, 0] = 0.25
    assert tau2_hat(s, 1, 2) == pytest.approx(0.25 ** 2 + 1.0)


def test_tau2_rejects_zero_diagonal():
    s = np.eye(3)
    s[1, 1] = 0.0
    with pytest.raises(InvalidModelError):
        tau2_hat(s, 1, 2)
    with pytest.raises(IndexError):
        tau2_hat(np.eye(3), 0, 1)


def test_tau2_matches_product_moment_variance(example1):
    """tau^2 is the variance of the innovation products eps_i * eps_j;
    check against a long residual sample with the true coefficients."""
    ts = simulate(example1, n=10 ** 5, seed=31)
    des = build(ts, d=1)
    resid = des.responses - des.x @ example1.coeffs[0].T
    for (i, j) in [(1, 2), (1, 6), (3, 5)]:
        products = resid[:, i - 1] * resid[:, j - 1]
        tau2_true = tau2_hat(example1.sigma_eps, i, j)
        assert abs(products.var() / tau2_true - 1.0) < 0.05


def _hand_stats(p=3):
    a_de = np.zeros((1, p, p))
    se = np.ones((1, p, p))
    sigma = np.eye(p)
    return a_de, se, sigma


def test_t_stat_single_entry():
    a_de, se, sigma = _hand_stats()
    a_de[0, 1, 2] = 0.5
    se[0, 1, 2] = 2.0
    g = GroupSpec(a_entries=((2, 3, 1),))
    val, where = t_stat(a_de, se, sigma, g, n=400)
    assert val == pytest.approx(20.0 * 0.5 / 2.0)
    assert where == ("a", 2, 3, 1)


def test_t_stat_exhaustive_max_of_two():
    a_de, se, sigma = _hand_stats()
    a_de[0, 0, 1] = 0.3
    a_de[0, 2, 0] = -0.7
    g = GroupSpec(a_entries=((1, 2, 1), (3, 1, 1)))
    val, where = t_stat(a_de, se, sigma, g, n=100)
    assert val == pytest.approx(10.0 * 0.7)
    assert where == ("a", 3, 1, 1)


def test_t_stat_tie_breaks_to_first_canonical_entry():
    a_de, se, sigma = _hand_stats()
    a_de[0, 0, 1] = 0.4
    a_de[0, 2, 0] = -0.4
    g = GroupSpec(a_entries=((3, 1, 1), (1, 2, 1)))
    _, where = t_stat(a_de, se, sigma, g, n=100)
    assert where == ("a", 1, 2, 1)  # canonical order sorts (1,2,1) first


def test_t_stat_monotone_in_group():
    gen = np.random.default_rng(2)
    a_de = gen.normal(size=(1, 4, 4))
    se = np.abs(gen.normal(size=(1, 4, 4))) + 0.1
    sigma = np.eye(4) + 0.1
    small = GroupSpec(a_entries=((1, 2, 1),))
    big = GroupSpec(a_entries=((1, 2, 1), (3, 3, 1)),
                    sigma_entries=((1, 4),))
    v1, _ = t_stat(a_de, se, sigma, small, n=50)
    v2, _ = t_stat(a_de, se, sigma, big, n=50)
    assert v2 >= v1


def test_t_stat_sigma_entries():
    a_de, se, sigma = _hand_stats()
    sigma[0, 2] = sigma[2, 0] = 0.6
    g = GroupSpec(sigma_entries=((1, 3),))
    val, where = t_stat(a_de, se, sigma, g, n=100)
    tau = np.sqrt(0.6 ** 2 + 1.0)
    assert val == pytest.approx(10.0 * 0.6 / tau)
    assert where == ("sigma", 1, 3)


def test_t_stat_requires_sigma_when_group_tests_it():
    a_de, se, _ = _hand_stats()
    g = GroupSpec(sigma_entries=((1, 2),))
    with pytest.raises(ValueError):
        t_stat(a_de, se, None, g, n=100)


def test_restricted_fit_freezes_group(example1_design, example1_config):
    group = examples.example1_group()
    res = restricted_fit(example1_design, example1_config, group)
    npt.assert_array_equal(res.a_init[0, 5, :5], np.zeros(5))
    # restricted innovation covariance obeys the null on (1, 6)
    assert res.model_thr.sigma_thr[0, 5] == 0.0
    assert res.model_thr.sigma_thr[5, 0] == 0.0


def test_restricted_fit_all_coefficients(example1_design, example1_config):
    """Freezing every coefficient leaves the raw second moments of the
    response block as the residual covariance."""
    group = GroupSpec(a_entries=tuple((j, r, 1) for j in range(1, 7)
                                      for r in range(1, 7)))
    res = restricted_fit(example1_design, example1_config, group)
    npt.assert_array_equal(res.a_init, np.zeros((1, 6, 6)))
    resp = example1_design.responses
    npt.assert_allclose(res.sigma_hat, resp.T @ resp / example1_design.m,
                        atol=1e-12)


def test_sigma_only_restriction_keeps_coefficients(example1_design,
                                                   example1_config):
    group = GroupSpec(sigma_entries=((1, 6),))
    res = restricted_fit(example1_design, example1_config, group)
    un = estimate_design(example1_design, example1_config)
    npt.assert_array_equal(res.a_init, un.a_init)
    npt.assert_array_equal(res.a_de, un.a_de)


def _h0_series(n=100, seed=5):
    model = examples.example1_test_model(0.0, 0.0)
    return simulate(model, n=n, seed=seed)


def test_bootstrap_test_deterministic_and_worker_invariant(example1_config):
    des = build(_h0_series(), d=1)
    group = examples.example1_group()
    r1 = bootstrap_test(des, example1_config, group, b_draws=80,
                        alpha=0.05, seed=11)
    r2 = bootstrap_test(des, example1_config, group, b_draws=80,
                        alpha=0.05, seed=11)
    npt.assert_array_equal(r1.null_stats, r2.null_stats)
    assert r1.statistic == r2.statistic and r1.p_value == r2.p_value
    r3 = bootstrap_test(des, example1_config, group, b_draws=80,
                        alpha=0.05, seed=11, workers=3)
    npt.assert_array_equal(r1.null_stats, r3.null_stats)
    assert r1.critical_value == r3.critical_value


def test_bootstrap_test_pvalue_and_reject_conventions(example1_config):
    des = build(_h0_series(seed=6), d=1)
    group = examples.example1_group()
    res = bootstrap_test(des, example1_config, group, b_draws=99,
                         alpha=0.10, seed=3)
    b_eff = res.null_stats.size
    expect_p = (1 + np.count_nonzero(res.null_stats >= res.statistic)) / (b_eff + 1)
    assert res.p_value == pytest.approx(expect_p, abs=0)
    assert 0 < res.p_value <= 1
    npt.assert_allclose(res.critical_value,
                        np.quantile(res.null_stats, 0.90), rtol=1e-12)
    assert res.reject == (res.statistic > res.critical_value)
    assert res.argmax[0] in ("a", "sigma")


def test_bootstrap_test_rejects_huge_coefficient(example1, example1_config):
    """A group holding a coefficient of 0.8 is rejected at n = 200."""
    group = GroupSpec(a_entries=((1, 1, 1),))  # true value 0.8
    for seed in (1, 2, 3):
        ts = simulate(example1, n=200, seed=seed)
        des = build(ts, d=1)
        res = bootstrap_test(des, example1_config, group, b_draws=199,
                             alpha=0.05, seed=seed)
        assert res.reject


def test_bootstrap_test_restricted_observed_flag(example1_config):
    des = build(_h0_series(seed=9), d=1)
    group = examples.example1_group()
    res = bootstrap_test(des, example1_config, group, b_draws=60,
                         alpha=0.05, seed=4, restricted_observed=True)
    assert res.observed is res.restricted
    default = bootstrap_test(des, example1_config, group, b_draws=60,
                             alpha=0.05, seed=4)
    assert default.observed is not default.restricted


def test_bootstrap_test_unstable_restricted_model(example1_config):
    """A restricted model over the stability margin refuses to resample."""
    gen = np.random.default_rng(0)
    # near-unit-root series: the fitted diagonal lands above 1 - margin
    n = 60
    x = np.empty((n, 2))
    x[0] = [1.0, -1.0]
    for t in range(1, n):
        x[t] = 1.001 * x[t - 1] + 0.001 * gen.normal(size=2)
    cfg = PipelineConfig(d=1, lam=0.0001, lambda_eps=0.0001, a_n=0.0001)
    des = build(x, d=1)
    group = GroupSpec(a_entries=((1, 2, 1),))
    with pytest.raises(UnstableModelError):
        bootstrap_test(des, cfg, group, b_draws=20, alpha=0.05, seed=0)


def test_pvalues_near_uniform_under_null(example1_config):
    """Smoke check: null p-values are close to uniform."""
    model = examples.example1_test_model(0.0, 0.0)
    group = examples.example1_group()
    pvals = []
    for i in range(200):
        ts = simulate(model, n=100, seed=(10_000 + i))
        des = build(ts, d=1)
        res = bootstrap_test(des, example1_config, group, b_draws=199,
                             alpha=0.05, seed=i)
        pvals.append(res.p_value)
    pvals = np.sort(pvals)
    grid = (np.arange(1, 201)) / 200.0
    sup = np.abs(pvals - grid).max()
    assert sup < 0.12
