"""Residual-free model bootstrap for de-biased VAR inference.

The generating model for the pseudo-series is the thresholded fit: the
de-biased coefficient value wherever the initial lasso estimate clears
the threshold a_n (zero elsewhere), paired with a hard-thresholded
residual covariance repaired to be positive definite. Pseudo-series drawn
from that model are refitted with the full estimation pipeline, and the
studentised draws

    sqrt(n) * (a_de* - a_thr) / se*

calibrate confidence intervals entrywise:

    [a_de + q(alpha/2) * se / sqrt(n),  a_de + q(1 - alpha/2) * se / sqrt(n)]

with q(.) the empirical (linear-interpolation) quantiles of the draws.

Replicates whose refit is degenerate (and only those) are dropped and
counted; the generating model itself is fixed, so an unstable thresholded
model fails the whole run rather than individual replicates.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import design as design_mod
from . import lasso, rng
from .desparsify import desparsify_all
from .errors import DegenerateDesignError, InvalidModelError, SizeError, UnstableModelError
from .varmodel import TimeSeries, VarModel, is_stable, simulate, validate_covariance

PSD_FLOOR = 1e-8
REJECTION_WARN_FRACTION = 0.05


@dataclass(eq=False)
class ThresholdedModel:
    """Generating model for the bootstrap: thresholded coefficients and
    thresholded (PSD-repaired) innovation covariance."""

    a_thr: np.ndarray       # (d, p, p)
    sigma_thr: np.ndarray   # (p, p)
    a_n: float
    lambda_eps: float

    def __post_init__(self):
        self.a_thr = np.asarray(self.a_thr, dtype=float)
        if self.a_thr.ndim == 2:
            self.a_thr = self.a_thr[None]
        self.sigma_thr = np.asarray(self.sigma_thr, dtype=float)
        self._model: VarModel | None = None

    @property
    def p(self) -> int:
        return self.a_thr.shape[1]

    @property
    def d(self) -> int:
        return self.a_thr.shape[0]

    def var_model(self) -> VarModel:
        if self._model is None:
            self._model = VarModel(self.a_thr, self.sigma_thr)
        return self._model


@dataclass(eq=False)
class ConfidenceInterval:
    target: tuple  # (j, r, s), 1-based
    estimate: float
    se: float      # O(1) studentisation scale; se / sqrt(n) is the coefficient-scale error
    lower: float
    upper: float
    level: float


@dataclass(eq=False)
class BootstrapRun:
    intervals: list
    stats: np.ndarray          # (B_effective, n_targets) studentised draws
    targets: list
    b_requested: int
    rejected: int
    alpha: float


def threshold_model(a_init, a_de, a_n: float) -> np.ndarray:
    """Entrywise coefficient threshold: keep the de-biased value where
    the initial estimate has magnitude >= a_n, zero elsewhere."""
    a_init = np.asarray(a_init, dtype=float)
    a_de = np.asarray(a_de, dtype=float)
    if a_init.shape != a_de.shape:
        raise SizeError(
            f"shape mismatch: initial {a_init.shape} vs de-biased {a_de.shape}"
        )
    if a_n < 0:
        raise ValueError(f"threshold must be >= 0, got {a_n}")
    return np.where(np.abs(a_init) >= a_n, a_de, 0.0)


def sigma_eps_hat(design: design_mod.LaggedDesign, a_thr) -> np.ndarray:
    """Residual second-moment matrix (1/m) sum_t e_t e_t' with residuals
    taken against the thresholded coefficients."""
    a_thr = np.asarray(a_thr, dtype=float)
    if a_thr.ndim == 2:
        a_thr = a_thr[None]
    d, p = design.d, design.p
    if a_thr.shape != (d, p, p):
        raise SizeError(f"coefficients have shape {a_thr.shape}, expected {(d, p, p)}")
    w = a_thr.transpose(0, 2, 1).reshape(d * p, p)
    resid = design.responses - design.x @ w
    return resid.T @ resid / design.m


def threshold_sigma(sigma, lambda_eps: float) -> np.ndarray:
    """Hard-threshold the off-diagonal of a covariance estimate and
    repair it to be positive definite.

    Off-diagonal entries with |value| < lambda_eps become zero; the
    diagonal is untouched. If the smallest eigenvalue of the result falls
    below 1e-8, a multiple of the identity is added to lift it exactly to
    that floor.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidModelError(f"covariance must be square, got shape {s.shape}")
    if np.abs(s - s.T).max() > 1e-10:
        raise InvalidModelError("covariance estimate is not symmetric")
    if lambda_eps < 0:
        raise ValueError(f"threshold must be >= 0, got {lambda_eps}")
    out = np.where(np.abs(s) >= lambda_eps, s, 0.0)
    np.fill_diagonal(out, np.diag(s))
    out = 0.5 * (out + out.T)
    wmin = float(np.linalg.eigvalsh(out).min())
    if wmin < PSD_FLOOR:
        out = out + (PSD_FLOOR - wmin) * np.eye(s.shape[0])
    return out


def generate(model_thr: ThresholdedModel, n: int, seed,
             burn_in: int | None = None) -> TimeSeries:
    """One pseudo-series from the thresholded model.

    Raises UnstableModelError when the thresholded coefficients are not
    stable; callers treat that as the replicate-rejection signal.
    """
    return simulate(model_thr.var_model(), n, burn_in=burn_in, seed=seed)


def _validate_targets(targets, p: int, d: int) -> list:
    out = []
    for t in targets:
        j, r, s = (int(v) for v in t)
        if not (1 <= j <= p and 1 <= r <= p and 1 <= s <= d):
            raise IndexError(
                f"target (j={j}, r={r}, s={s}) outside 1..{p} x 1..{p} x 1..{d}"
            )
        out.append((j, r, s))
    if not out:
        raise ValueError("no targets given")
    return out


def _replicate_stats(model: VarModel, n: int, d: int,
                     config: lasso.LassoConfig,
                     nodewise_config: lasso.LassoConfig,
                     burn_in: int | None,
                     targets: list, center: np.ndarray,
                     seed_b) -> np.ndarray:
    """Studentised statistics of one replicate (may raise the rejection
    signals DegenerateDesignError / UnstableModelError)."""
    ts = simulate(model, n, burn_in=burn_in, seed=seed_b)
    des = design_mod.build(ts, d)
    a_init = lasso.fit_system(des, config)
    dfit = desparsify_all(des, a_init, nodewise_config)
    sqrt_n = np.sqrt(n)
    vals = np.empty(len(targets))
    for i, (j, r, s) in enumerate(targets):
        est = dfit.a_de[s - 1, j - 1, r - 1]
        se = dfit.se_hat[s - 1, j - 1, r - 1]
        vals[i] = sqrt_n * (est - center[i]) / se if se > 0 else np.nan
    return vals


def _run_chunk(args) -> tuple[list, list]:
    """Worker for parallel replicate evaluation: returns (rows, rejected
    indices) for a contiguous range of replicate indices."""
    (a_thr, sigma_thr, n, d, config, nodewise, burn_in,
     targets, center, seed_entropy, seed_key, b_lo, b_hi) = args
    model = VarModel(a_thr, sigma_thr)
    base = np.random.SeedSequence(entropy=seed_entropy, spawn_key=seed_key)
    rows, rejected = [], []
    for b in range(b_lo, b_hi):
        seed_b = rng.child_seed(base, rng.STREAM_REPLICATE, b)
        try:
            vals = _replicate_stats(model, n, d, config, nodewise,
                                    burn_in, targets, center, seed_b)
        except (DegenerateDesignError, UnstableModelError):
            rejected.append(b)
            continue
        if not np.isfinite(vals).all():
            rejected.append(b)
            continue
        rows.append((b, vals))
    return rows, rejected


def run(design: design_mod.LaggedDesign, fit, model_thr: ThresholdedModel,
        targets, b_draws: int, alpha: float, seed,
        config: lasso.LassoConfig,
        nodewise_config: lasso.LassoConfig | None = None,
        burn_in: int | None = None,
        workers: int = 1) -> BootstrapRun:
    """Bootstrap confidence intervals for a list of coefficients.

    fit is the DesparsifiedFit of the observed series; model_thr the
    thresholded model derived from it. Replicate b draws its RNG stream
    from (seed, replicate, b), so results are identical for any number of
    workers. The refit uses the same penalties as the original fit
    (config for the row regressions, nodewise_config for the
    instruments; defaults to config).

    Intervals pair the empirical quantiles of the studentised draws with
    the observed de-biased estimate and its plug-in standard error at
    level 1 - alpha. Raises UnstableModelError if the thresholded model
    is unstable (every replicate would be rejected), and warns when more
    than 5% of replicates are rejected.
    """
    if b_draws < 1:
        raise ValueError(f"need at least one replicate, got {b_draws}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    p, d, n = design.p, design.d, design.n
    targets = _validate_targets(targets, p, d)
    if nodewise_config is None:
        nodewise_config = config

    model = model_thr.var_model()  # validates; raises on malformed sigma
    validate_covariance(model_thr.sigma_thr, p=p)
    if not is_stable(model):
        # every replicate would be rejected; fail before simulating any
        raise UnstableModelError(
            "all bootstrap replicates were rejected; the thresholded model "
            "does not support resampling"
        )

    center = np.array([model_thr.a_thr[s - 1, j - 1, r - 1]
                       for (j, r, s) in targets])

    stats = np.full((b_draws, len(targets)), np.nan)
    rejected: list[int] = []
    seed_ss = rng.as_seed_sequence(seed)

    if workers <= 1:
        rows, rej = _run_chunk((
            model_thr.a_thr, model_thr.sigma_thr, n, d,
            config, nodewise_config,
            burn_in, targets, center,
            seed_ss.entropy, tuple(seed_ss.spawn_key), 0, b_draws,
        ))
        for b, vals in rows:
            stats[b] = vals
        rejected.extend(rej)
    else:
        n_chunks = min(workers * 4, b_draws)
        bounds = np.linspace(0, b_draws, n_chunks + 1, dtype=int)
        tasks = [(
            model_thr.a_thr, model_thr.sigma_thr, n, d,
            config, nodewise_config,
            burn_in, targets, center,
            seed_ss.entropy, tuple(seed_ss.spawn_key),
            int(bounds[i]), int(bounds[i + 1]),
        ) for i in range(n_chunks) if bounds[i] < bounds[i + 1]]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows, rej in pool.map(_run_chunk, tasks):
                for b, vals in rows:
                    stats[b] = vals
                rejected.extend(rej)

    keep = ~np.isnan(stats).any(axis=1)
    n_rej = int(b_draws - keep.sum())
    if n_rej == b_draws:
        raise UnstableModelError(
            "all bootstrap replicates were rejected; the thresholded model "
            "does not support resampling"
        )
    if n_rej > REJECTION_WARN_FRACTION * b_draws:
        warnings.warn(
            f"{n_rej} of {b_draws} bootstrap replicates rejected",
            RuntimeWarning,
        )
    valid = stats[keep]

    sqrt_n = np.sqrt(n)
    intervals = []
    for i, (j, r, s) in enumerate(targets):
        q_lo, q_hi = np.quantile(valid[:, i], [alpha / 2, 1 - alpha / 2])
        est = float(fit.a_de[s - 1, j - 1, r - 1])
        se = float(fit.se_hat[s - 1, j - 1, r - 1])
        intervals.append(ConfidenceInterval(
            target=(j, r, s), estimate=est, se=se,
            lower=est + q_lo * se / sqrt_n,
            upper=est + q_hi * se / sqrt_n,
            level=1.0 - alpha,
        ))
    return BootstrapRun(intervals=intervals, stats=valid, targets=targets,
                        b_requested=b_draws, rejected=n_rej, alpha=alpha)
