"""L1-penalised least squares by cyclic coordinate descent.

The objective is

    (1/m) ||y - X xi||_2^2  +  2 * lam * ||xi||_1,

with m the number of rows. On this scale the stationarity condition at a
zero coordinate reads |(1/m) X_k'(y - X xi)| <= lam, which is what the
`kkt_violation` helper measures. The penalty level is always explicit;
there is no built-in cross-validation (the CLI offers a grid sweep
instead).

Columns are used as-is by default: no standardisation and no intercept.
Callers that want centred data subtract means before building the design.
`LassoConfig.standardize` opts into unit root-mean-square column scaling;
replication runs leave it off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import cd_lasso
from .design import ColumnIndex, LaggedDesign, drop_column
from .errors import SizeError

_EMPTY_OBJ = np.empty(0)


@dataclass(frozen=True, eq=False)
class LassoConfig:
    """Penalty level and solver knobs.

    lam          penalty on the (1/m) residual scale; must be >= 0.
    max_iter     cap on coordinate sweeps (active-set sweeps included).
    tol          convergence threshold: a converged fit moved no
                 coordinate by more than tol on its last full sweep and
                 satisfies every stationarity condition within tol.
    warm_start   optional starting coefficients; a per-call vector passed
                 to `fit` takes precedence.
    standardize  scale columns to unit root-mean-square before solving
                 and map the solution back to the original scale. Off by
                 default, and off in every replication run.
    """

    lam: float
    max_iter: int = 10000
    tol: float = 1e-8
    warm_start: np.ndarray | None = None
    standardize: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"penalty must be finite and >= 0, got {self.lam}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(eq=False)
class LassoFit:
    coef: np.ndarray
    iterations: int
    converged: bool
    objective: float
    objective_path: np.ndarray | None = None


def fit(x: np.ndarray, y: np.ndarray, config: LassoConfig,
        warm_start: np.ndarray | None = None,
        frozen: np.ndarray | None = None,
        track_objective: bool = False) -> LassoFit:
    """Solve one lasso problem.

    warm_start   initial coefficients (copied, not mutated); overrides
                 config.warm_start when both are given.
    frozen       boolean mask of coordinates pinned at their starting
                 value and skipped by the sweeps; used for restricted
                 fits where a group of coefficients is forced to zero.
    track_objective
                 record the objective after every sweep (test hook).

    With config.standardize the solve happens on columns scaled to unit
    root-mean-square (zero-norm columns are left alone); coefficients
    come back on the original scale, while `objective` and the KKT
    guarantee refer to the scaled problem.
    """
    x = np.asfortranarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise SizeError(f"incompatible shapes x {x.shape}, y {y.shape}")
    m, q = x.shape
    if m < 1 or q < 1:
        raise SizeError(f"design must be non-empty, got {m} x {q}")
    if not np.isfinite(x).all() or not np.isfinite(y).all():
        raise ValueError("design or response contains non-finite values")

    scale = None
    if config.standardize:
        scale = np.sqrt(np.einsum("ij,ij->j", x, x) / m)
        scale[scale == 0.0] = 1.0
        x = np.asfortranarray(x / scale)

    if warm_start is None:
        warm_start = config.warm_start
    if warm_start is None:
        beta = np.zeros(q)
    else:
        beta = np.array(warm_start, dtype=float)
        if beta.shape != (q,):
            raise SizeError(f"warm start has shape {beta.shape}, expected ({q},)")
        if scale is not None:
            beta *= scale
    if frozen is None:
        frozen_mask = np.zeros(q, dtype=np.bool_)
    else:
        frozen_mask = np.asarray(frozen, dtype=np.bool_)
        if frozen_mask.shape != (q,):
            raise SizeError(f"frozen mask has shape {frozen_mask.shape}, expected ({q},)")

    obj_hist = np.empty(config.max_iter) if track_objective else _EMPTY_OBJ
    sweeps, converged, objective = cd_lasso(
        x, y, config.lam, config.max_iter, config.tol,
        beta, frozen_mask, obj_hist, track_objective,
    )
    if scale is not None:
        beta /= scale
    path = obj_hist[:sweeps].copy() if track_objective else None
    return LassoFit(coef=beta, iterations=int(sweeps), converged=bool(converged),
                    objective=float(objective), objective_path=path)


def fit_row(design: LaggedDesign, j: int, config: LassoConfig,
            warm_start: np.ndarray | None = None,
            frozen: np.ndarray | None = None) -> LassoFit:
    """Lasso regression of variable j's response on the full lag matrix.

    The coefficient vector is variable j's stacked row: entry
    (s-1)*p + r - 1 multiplies variable r at lag s.
    """
    return fit(design.x, design.response(j), config,
               warm_start=warm_start, frozen=frozen)


def fit_system(design: LaggedDesign, config: LassoConfig,
               frozen_rows: dict[int, np.ndarray] | None = None) -> np.ndarray:
    """Fit all p row regressions and return the (d, p, p) coefficient
    array ([s - 1, j - 1, r - 1] is variable r at lag s in row j).

    frozen_rows maps a variable index j (1-based) to a boolean mask over
    the q = p*d stacked coordinates; masked coordinates are pinned at
    zero for that row's fit.
    """
    d, p, q = design.d, design.p, design.q
    w = np.empty((q, p))
    for j in range(1, p + 1):
        frozen = frozen_rows.get(j) if frozen_rows else None
        res = fit_row(design, j, config, frozen=frozen)
        w[:, j - 1] = res.coef
    return w.reshape(d, p, p).transpose(0, 2, 1)


def fit_nodewise(design: LaggedDesign, idx: ColumnIndex,
                 config: LassoConfig) -> LassoFit:
    """Lasso regression of one design column on all the others.

    The fitted residual is the de-biasing instrument for coefficients on
    column idx. Coefficients are indexed by the reduced design; use
    idx.dropped_position to map original columns.
    """
    reduced, target = drop_column(design, idx)
    return fit(reduced, target, config)


def kkt_violation(x: np.ndarray, y: np.ndarray, coef: np.ndarray,
                  lam: float) -> float:
    """Largest stationarity-condition violation of `coef`.

    For active coordinates the gradient (1/m) X_k'(y - X coef) must equal
    lam * sign(coef_k); for zero coordinates its magnitude must not
    exceed lam. Returns the worst gap (0 means exact stationarity).
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    grad = x.T @ (y - x @ coef) / m
    worst = 0.0
    for k in range(x.shape[1]):
        if coef[k] > 0:
            gap = abs(grad[k] - lam)
        elif coef[k] < 0:
            gap = abs(grad[k] + lam)
        else:
            gap = max(0.0, abs(grad[k]) - lam)
        worst = max(worst, gap)
    return worst
