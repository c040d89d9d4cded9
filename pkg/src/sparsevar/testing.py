"""Bootstrap-calibrated max-type tests for groups of coefficients and
innovation covariances.

The null states that every coefficient in a group G_A and every
innovation covariance in a group G_Sigma is zero. The observed statistic
is the largest studentised magnitude over the group,

    T = max( max_{(j,r,s) in G_A}   sqrt(n) |a_de[j,r,s]| / se[j,r,s],
             max_{(i,j) in G_Sigma} sqrt(n) |sigma_hat[i,j]| / tau[i,j] ),

with tau^2 = sigma_hat[i,j]^2 + sigma_hat[i,i] * sigma_hat[j,j]. Its null
distribution is estimated by refitting pseudo-series drawn from the
restricted model (group entries forced to zero before thresholding);
the replicate statistics are left uncentred because the generating model
satisfies the null exactly.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import design as design_mod
from . import rng
from .bootstrap import REJECTION_WARN_FRACTION, ThresholdedModel
from .errors import DegenerateDesignError, InvalidModelError, UnstableModelError
from .pipeline import PipelineConfig, PipelineFit, estimate_design
from .varmodel import is_stable, simulate


@dataclass(frozen=True)
class GroupSpec:
    """A test group: coefficient triples (j, r, s) and covariance pairs
    (i, j), all 1-based. Entries are normalised to a canonical sorted
    order; that order breaks ties when several statistics attain the
    maximum."""

    a_entries: tuple = ()
    sigma_entries: tuple = ()

    def __post_init__(self):
        a = tuple(sorted({(int(j), int(r), int(s)) for (j, r, s) in self.a_entries}))
        sig = []
        for (i, j) in self.sigma_entries:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(
                    f"covariance entry ({i}, {j}) is a variance; only "
                    "off-diagonal covariances can be tested against zero"
                )
            sig.append((min(i, j), max(i, j)))
        object.__setattr__(self, "a_entries", a)
        object.__setattr__(self, "sigma_entries", tuple(sorted(set(sig))))
        if not self.a_entries and not self.sigma_entries:
            raise ValueError("group is empty")

    def validate(self, p: int, d: int) -> None:
        for (j, r, s) in self.a_entries:
            if not (1 <= j <= p and 1 <= r <= p and 1 <= s <= d):
                raise IndexError(
                    f"group entry (j={j}, r={r}, s={s}) outside "
                    f"1..{p} x 1..{p} x 1..{d}"
                )
        for (i, j) in self.sigma_entries:
            if not (1 <= i <= p and 1 <= j <= p):
                raise IndexError(f"covariance entry ({i}, {j}) outside 1..{p}")


@dataclass(eq=False)
class TestResult:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    argmax: tuple               # ("a", j, r, s) or ("sigma", i, j)
    null_stats: np.ndarray      # accepted replicate statistics
    b_requested: int
    rejected_replicates: int
    observed: PipelineFit
    restricted: PipelineFit


def tau2_hat(sigma_hat: np.ndarray, i: int, j: int) -> float:
    """Variance proxy for sqrt(n) * sigma_hat[i, j] under Gaussian
    innovations: sigma[i,j]^2 + sigma[i,i] * sigma[j,j]."""
    s = np.asarray(sigma_hat, dtype=float)
    p = s.shape[0]
    if not (1 <= i <= p and 1 <= j <= p):
        raise IndexError(f"covariance entry ({i}, {j}) outside 1..{p}")
    sii, sjj, sij = s[i - 1, i - 1], s[j - 1, j - 1], s[i - 1, j - 1]
    if sii <= 0 or sjj <= 0:
        raise InvalidModelError(
            f"residual covariance has non-positive diagonal at ({i}, {i}) "
            f"or ({j}, {j}); the covariance statistic is undefined"
        )
    return float(sij * sij + sii * sjj)


def t_stat(a_de: np.ndarray, se_hat: np.ndarray, sigma_hat: np.ndarray | None,
           group: GroupSpec, n: int) -> tuple[float, tuple]:
    """Max studentised magnitude over the group, and where it occurs.

    Candidates are scanned in the group's canonical order (coefficient
    entries first); the first strict maximum wins, so ties resolve to the
    earliest entry. Enlarging a group can only increase the statistic.
    """
    sqrt_n = np.sqrt(n)
    best = -np.inf
    where: tuple = ()
    for (j, r, s) in group.a_entries:
        se = se_hat[s - 1, j - 1, r - 1]
        if se <= 0:
            raise DegenerateDesignError(r, s, "standard error is zero for a group entry")
        val = sqrt_n * abs(a_de[s - 1, j - 1, r - 1]) / se
        if val > best:
            best, where = val, ("a", j, r, s)
    if group.sigma_entries:
        if sigma_hat is None:
            raise ValueError("group tests covariances but sigma_hat is missing")
        for (i, j) in group.sigma_entries:
            tau = np.sqrt(tau2_hat(sigma_hat, i, j))
            val = sqrt_n * abs(sigma_hat[i - 1, j - 1]) / tau
            if val > best:
                best, where = val, ("sigma", i, j)
    return float(best), where


def restricted_fit(design: design_mod.LaggedDesign, config: PipelineConfig,
                   group: GroupSpec) -> PipelineFit:
    """Pipeline fit with the group forced to satisfy the null: its
    coefficients are frozen at zero in the row regressions and its
    covariance entries zeroed before the covariance threshold. The
    returned fit carries the restricted generating model."""
    group.validate(design.p, design.d)
    return estimate_design(design, config, group=group, with_threshold=True)


def _test_chunk(args) -> tuple[list, list]:
    (a_thr, sigma_thr, a_n, lambda_eps, n, config, group,
     seed_entropy, seed_key, b_lo, b_hi) = args
    model_thr = ThresholdedModel(a_thr=a_thr, sigma_thr=sigma_thr,
                                 a_n=a_n, lambda_eps=lambda_eps)
    model = model_thr.var_model()
    base = np.random.SeedSequence(entropy=seed_entropy, spawn_key=seed_key)
    rows, rejected = [], []
    for b in range(b_lo, b_hi):
        seed_b = rng.child_seed(base, rng.STREAM_REPLICATE, b)
        try:
            ts = simulate(model, n, burn_in=config.burn_in, seed=seed_b)
            pipe = estimate_design(design_mod.build(ts, config.d), config,
                                   with_threshold=True)
            val, _ = t_stat(pipe.a_de, pipe.se_hat, pipe.sigma_hat, group, n)
        except (DegenerateDesignError, UnstableModelError, InvalidModelError):
            rejected.append(b)
            continue
        if not np.isfinite(val):
            rejected.append(b)
            continue
        rows.append((b, val))
    return rows, rejected


def bootstrap_test(design: design_mod.LaggedDesign, config: PipelineConfig,
                   group: GroupSpec, b_draws: int, alpha: float, seed,
                   restricted_observed: bool = False,
                   workers: int = 1) -> TestResult:
    """Test that every entry of the group is zero.

    The observed statistic comes from the unrestricted fit by default
    (restricted_observed=True studentises the restricted fit instead; its
    de-biasing correction then reflects the frozen initial estimates).
    Pseudo-series are drawn from the restricted thresholded model, each
    replicate refitted without restrictions, and the replicate statistics
    taken as the null distribution: the critical value is their empirical
    (1 - alpha)-quantile and

        p = (1 + #{T*_b >= T}) / (B_effective + 1).

    Replicate b's RNG stream depends only on (seed, b); any worker count
    gives identical results. Raises UnstableModelError if the restricted
    thresholded model is unstable.
    """
    if b_draws < 1:
        raise ValueError(f"need at least one replicate, got {b_draws}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    group.validate(design.p, design.d)

    restricted = restricted_fit(design, config, group)
    if restricted_observed:
        observed = restricted
    else:
        observed = estimate_design(design, config, with_threshold=True)
    t_obs, where = t_stat(observed.a_de, observed.se_hat,
                          observed.sigma_hat, group, design.n)

    model_thr = restricted.model_thr
    if not is_stable(model_thr.var_model()):
        # every replicate would be rejected; fail before simulating any
        raise UnstableModelError(
            "all bootstrap replicates were rejected; the restricted model "
            "does not support resampling"
        )
    seed_ss = rng.as_seed_sequence(seed)
    task_tail = (seed_ss.entropy, tuple(seed_ss.spawn_key))

    def make_task(lo: int, hi: int):
        return (model_thr.a_thr, model_thr.sigma_thr, model_thr.a_n,
                model_thr.lambda_eps, design.n, config, group,
                *task_tail, lo, hi)

    stats = np.full(b_draws, np.nan)
    rejected: list[int] = []
    if workers <= 1:
        rows, rej = _test_chunk(make_task(0, b_draws))
        for b, val in rows:
            stats[b] = val
        rejected.extend(rej)
    else:
        n_chunks = min(workers * 4, b_draws)
        bounds = np.linspace(0, b_draws, n_chunks + 1, dtype=int)
        tasks = [make_task(int(bounds[i]), int(bounds[i + 1]))
                 for i in range(n_chunks) if bounds[i] < bounds[i + 1]]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows, rej in pool.map(_test_chunk, tasks):
                for b, val in rows:
                    stats[b] = val
                rejected.extend(rej)

    keep = ~np.isnan(stats)
    n_rej = int(b_draws - keep.sum())
    if n_rej == b_draws:
        raise UnstableModelError(
            "all bootstrap replicates were rejected; the restricted model "
            "does not support resampling"
        )
    if n_rej > REJECTION_WARN_FRACTION * b_draws:
        warnings.warn(
            f"{n_rej} of {b_draws} bootstrap replicates rejected",
            RuntimeWarning,
        )
    null_stats = stats[keep]

    crit = float(np.quantile(null_stats, 1.0 - alpha))
    b_eff = null_stats.size
    p_value = float((1 + np.count_nonzero(null_stats >= t_obs)) / (b_eff + 1))
    return TestResult(
        statistic=t_obs, critical_value=crit, p_value=p_value,
        reject=bool(t_obs > crit), alpha=alpha, argmax=where,
        null_stats=null_stats, b_requested=b_draws,
        rejected_replicates=n_rej, observed=observed, restricted=restricted,
    )
