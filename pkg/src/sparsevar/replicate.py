"""Monte-Carlo studies: CI coverage grids and test rejection rates.

Each trial simulates a fresh series from a known model, runs the full
estimation pipeline, and records per-target hits (coverage) or
per-alpha rejections (tests). Trial i draws its data from the
(seed, data, i) stream and its bootstrap from (seed, trial, i), so
results do not depend on how trials are distributed over workers;
aggregation uses integer counts in trial order for the same reason.

Trials whose thresholded model cannot be resampled (unstable, or a
degenerate design) are dropped and counted, mirroring the
reject-and-count rule used for bootstrap replicates. More than 5%
dropped attaches a warning; all dropped raises.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import bootstrap, design, pipeline, rng, testing
from .errors import DegenerateDesignError, InvalidModelError, UnstableModelError
from .varmodel import VarModel, simulate

TRIAL_WARN_FRACTION = 0.05


def _all_targets(p: int, d: int) -> list:
    return [(j, r, s)
            for s in range(1, d + 1)
            for j in range(1, p + 1)
            for r in range(1, p + 1)]


def _chunk_bounds(n_items: int, workers: int) -> list:
    n_chunks = min(max(workers, 1) * 4, n_items)
    bounds = np.linspace(0, n_items, n_chunks + 1, dtype=int)
    return [(int(bounds[i]), int(bounds[i + 1]))
            for i in range(n_chunks) if bounds[i] < bounds[i + 1]]


def _dispatch(worker, args_common, n_mc: int, workers: int) -> list:
    """Run worker over trial ranges; returns the per-trial records."""
    out = []
    if workers <= 1:
        out.extend(worker(args_common + (0, n_mc)))
    else:
        tasks = [args_common + (lo, hi) for lo, hi in _chunk_bounds(n_mc, workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(worker, tasks):
                out.extend(part)
    out.sort(key=lambda rec: rec[0])
    return out


@dataclass(eq=False)
class CoverageStudy:
    """Empirical coverage of the de-biased CIs over Monte-Carlo trials.

    bootstrap/asymptotic have shape (len(levels), d, p, p); entry
    [l, s-1, j-1, r-1] is the fraction of kept trials whose interval for
    coefficient (j, r, s) covered the truth.
    """

    levels: tuple
    bootstrap: np.ndarray
    asymptotic: np.ndarray
    n: int
    b_draws: int
    n_mc: int
    kept: int
    trial_rejections: int
    replicate_rejections: int

    def matrix(self, level: float, method: str, lag: int = 1) -> np.ndarray:
        l = self.levels.index(level)
        grid = self.bootstrap if method == "bootstrap" else self.asymptotic
        return grid[l, lag - 1]


def _coverage_chunk(args):
    (coeffs, sigma, n, b_draws, config, levels, burn_in,
     entropy, spawn_key, lo, hi) = args
    model = VarModel(coeffs, sigma)
    p, d = model.p, model.d
    targets = _all_targets(p, d)
    truth = np.array([coeffs[s - 1, j - 1, r - 1] for (j, r, s) in targets])
    z = norm.ppf([(1.0 + lev) / 2.0 for lev in levels])
    sqrt_n = np.sqrt(n)
    records = []
    for i in range(lo, hi):
        data_seed = rng.child_seed_from(entropy, spawn_key, rng.STREAM_DATA, i)
        ts = simulate(model, n, burn_in=burn_in, seed=data_seed)
        try:
            fit = pipeline.estimate(ts, config)
            run = bootstrap.run(
                fit.design, fit.fit, fit.model_thr, targets,
                b_draws=b_draws, alpha=1.0 - max(levels),
                seed=rng.child_seed_from(entropy, spawn_key, rng.STREAM_TRIAL, i),
                config=config.lasso_config(),
                nodewise_config=config.nodewise_config(),
                burn_in=burn_in,
            )
        except (UnstableModelError, DegenerateDesignError):
            records.append((i, None, None, 0))
            continue
        est = np.array([fit.a_de[s - 1, j - 1, r - 1] for (j, r, s) in targets])
        se = np.array([fit.se_hat[s - 1, j - 1, r - 1] for (j, r, s) in targets])
        err = est - truth
        boot = np.empty((len(levels), len(targets)), dtype=np.uint8)
        asym = np.empty_like(boot)
        for l, lev in enumerate(levels):
            alpha = 1.0 - lev
            q_lo, q_hi = np.quantile(run.stats, [alpha / 2, 1 - alpha / 2], axis=0)
            # CI covers iff est + q_lo*se/sqrt(n) <= truth <= est + q_hi*se/sqrt(n)
            boot[l] = (err + q_lo * se / sqrt_n <= 0) & (0 <= err + q_hi * se / sqrt_n)
            asym[l] = np.abs(err) <= z[l] * se / sqrt_n
        records.append((i, boot, asym, run.rejected))
    return records


def run_coverage_study(model: VarModel, n: int, n_mc: int, b_draws: int,
                       config: pipeline.PipelineConfig, seed,
                       levels=(0.90, 0.95), burn_in: int | None = None,
                       workers: int = 1) -> CoverageStudy:
    """Coverage of bootstrap and plug-in normal CIs for every coefficient."""
    if n_mc < 1:
        raise ValueError(f"need at least one trial, got {n_mc}")
    levels = tuple(sorted(float(l) for l in levels))
    if not all(0.0 < l < 1.0 for l in levels):
        raise ValueError(f"levels must lie in (0, 1), got {levels}")
    seed_ss = rng.as_seed_sequence(seed)
    common = (model.coeffs, model.sigma_eps, n, b_draws, config, levels,
              burn_in, seed_ss.entropy, tuple(seed_ss.spawn_key))
    records = _dispatch(_coverage_chunk, common, n_mc, workers)

    p, d = model.p, model.d
    n_targets = p * p * d
    boot_hits = np.zeros((len(levels), n_targets), dtype=np.int64)
    asym_hits = np.zeros_like(boot_hits)
    kept = 0
    rep_rejected = 0
    for i, boot, asym, n_rej in records:
        if boot is None:
            continue
        kept += 1
        rep_rejected += n_rej
        boot_hits += boot
        asym_hits += asym
    dropped = n_mc - kept
    if kept == 0:
        raise UnstableModelError("every Monte-Carlo trial was rejected")
    if dropped > TRIAL_WARN_FRACTION * n_mc:
        warnings.warn(f"{dropped} of {n_mc} trials rejected", RuntimeWarning)

    shape = (len(levels), d, p, p)
    return CoverageStudy(
        levels=levels,
        bootstrap=(boot_hits / kept).reshape(shape),
        asymptotic=(asym_hits / kept).reshape(shape),
        n=n, b_draws=b_draws, n_mc=n_mc, kept=kept,
        trial_rejections=dropped, replicate_rejections=rep_rejected,
    )


@dataclass(eq=False)
class TestStudy:
    """Rejection frequency of the bootstrap max-test over trials."""

    alphas: tuple
    rejection_rates: np.ndarray     # one rate per alpha
    n: int
    b_draws: int
    n_mc: int
    kept: int
    trial_rejections: int
    replicate_rejections: int


def _test_study_chunk(args):
    (coeffs, sigma, n, b_draws, config, group, alphas, burn_in,
     restricted_observed, entropy, spawn_key, lo, hi) = args
    model = VarModel(coeffs, sigma)
    records = []
    for i in range(lo, hi):
        data_seed = rng.child_seed_from(entropy, spawn_key, rng.STREAM_DATA, i)
        ts = simulate(model, n, burn_in=burn_in, seed=data_seed)
        try:
            des = design.build(ts, config.d)
            res = testing.bootstrap_test(
                des, config, group, b_draws=b_draws, alpha=alphas[0],
                seed=rng.child_seed_from(entropy, spawn_key, rng.STREAM_TRIAL, i),
                restricted_observed=restricted_observed,
            )
        except (UnstableModelError, DegenerateDesignError, InvalidModelError):
            records.append((i, None, 0))
            continue
        rejects = np.array(
            [res.statistic > np.quantile(res.null_stats, 1.0 - a) for a in alphas],
            dtype=np.uint8,
        )
        records.append((i, rejects, res.rejected_replicates))
    return records


def run_test_study(model: VarModel, group: testing.GroupSpec, n: int,
                   n_mc: int, b_draws: int, config: pipeline.PipelineConfig,
                   seed, alphas=(0.05, 0.10), burn_in: int | None = None,
                   restricted_observed: bool = False,
                   workers: int = 1) -> TestStudy:
    """Rejection frequency of the group-zero test under the given model."""
    if n_mc < 1:
        raise ValueError(f"need at least one trial, got {n_mc}")
    alphas = tuple(float(a) for a in alphas)
    if not all(0.0 < a < 1.0 for a in alphas):
        raise ValueError(f"alphas must lie in (0, 1), got {alphas}")
    group.validate(model.p, config.d)
    seed_ss = rng.as_seed_sequence(seed)
    common = (model.coeffs, model.sigma_eps, n, b_draws, config, group,
              alphas, burn_in, restricted_observed,
              seed_ss.entropy, tuple(seed_ss.spawn_key))
    records = _dispatch(_test_study_chunk, common, n_mc, workers)

    counts = np.zeros(len(alphas), dtype=np.int64)
    kept = 0
    rep_rejected = 0
    for i, rejects, n_rej in records:
        if rejects is None:
            continue
        kept += 1
        rep_rejected += n_rej
        counts += rejects
    dropped = n_mc - kept
    if kept == 0:
        raise UnstableModelError("every Monte-Carlo trial was rejected")
    if dropped > TRIAL_WARN_FRACTION * n_mc:
        warnings.warn(f"{dropped} of {n_mc} trials rejected", RuntimeWarning)

    return TestStudy(
        alphas=alphas, rejection_rates=counts / kept,
        n=n, b_draws=b_draws, n_mc=n_mc, kept=kept,
        trial_rejections=dropped, replicate_rejections=rep_rejected,
    )
