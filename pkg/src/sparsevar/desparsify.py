"""De-biased (de-sparsified) coefficient estimates and their standard
errors.

The initial lasso estimate of each coefficient row is corrected with an
instrument built from a nodewise regression: for design column k
(variable r at lag s), the instrument z_k is the residual of column k
regressed on every other column. The corrected coefficient is

    a_de[k, j] = a_init[k, j] + z_k'(y_j - X alpha_j^init) / (z_k' x_k),

one correction per (column, response) pair. Its plug-in standard error is

    se[k, j]^2 = ||y_j - X alpha_j^init||^2 * (z_k' z_k) / (z_k' x_k)^2,

an O(1) quantity: the studentised statistic is sqrt(n) * (a_de - a) / se.

`asymptotic_se` and `asymptotic_cov` give the population counterparts for
a known model, used to sanity-check the plug-in quantities in simulation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import lasso
from .design import ColumnIndex, LaggedDesign, drop_column
from .errors import DegenerateDesignError, SizeError
from .varmodel import VarModel, population_autocov

DEGENERATE_RTOL = 1e-12


def stack_rows(a: np.ndarray) -> np.ndarray:
    """(d, p, p) coefficient array -> (p*d, p) matrix whose column j - 1
    is variable j's stacked regression vector (lag-major)."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 2:
        a = a[None]
    d, p, p2 = a.shape
    if p != p2:
        raise SizeError(f"coefficient matrices must be square, got {a.shape}")
    return a.transpose(0, 2, 1).reshape(d * p, p)


def unstack_rows(w: np.ndarray, d: int) -> np.ndarray:
    """Inverse of stack_rows."""
    q, p = w.shape
    if q != d * p:
        raise SizeError(f"stacked matrix has {q} rows, expected d*p = {d * p}")
    return w.reshape(d, p, p).transpose(0, 2, 1)


@dataclass(eq=False)
class DesparsifiedFit:
    """De-biased estimates plus the caches needed to studentise them.

    a_de, a_init, se_hat are (d, p, p): [s - 1, j - 1, r - 1] addresses
    the effect of variable r at lag s on variable j. z_hats is m x (p*d)
    (instrument residual per design column), denom the per-column values
    z_k' x_k, resid_init the m x p initial-fit residuals.
    """

    a_de: np.ndarray
    a_init: np.ndarray
    se_hat: np.ndarray
    z_hats: np.ndarray
    denom: np.ndarray
    resid_init: np.ndarray


def residual_z(design: LaggedDesign, idx: ColumnIndex,
               beta_hat: np.ndarray) -> np.ndarray:
    """Instrument residual for one column: the column minus the nodewise
    prediction from all other columns."""
    reduced, target = drop_column(design, idx)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.shape != (reduced.shape[1],):
        raise SizeError(
            f"nodewise coefficients have shape {beta_hat.shape}, "
            f"expected ({reduced.shape[1]},)"
        )
    return target - reduced @ beta_hat


def desparsify_all(design: LaggedDesign, a_init,
                   nodewise_config: lasso.LassoConfig) -> DesparsifiedFit:
    """De-bias every coefficient of an initial estimate.

    Nodewise regressions are fitted once per design column and shared
    across the p responses, so the whole correction costs p*d lasso fits
    regardless of how many coefficients are reported.

    Raises DegenerateDesignError when an instrument is numerically
    orthogonal to its own column (|z_k' x_k| below a relative floor),
    which happens only for degenerate designs.
    """
    a_init = np.asarray(a_init, dtype=float)
    if a_init.ndim == 2:
        a_init = a_init[None]
    d, p = design.d, design.p
    if a_init.shape != (d, p, p):
        raise SizeError(
            f"initial estimate has shape {a_init.shape}, expected {(d, p, p)}"
        )
    m, q = design.m, design.q

    w_init = stack_rows(a_init)
    resid_init = design.responses - design.x @ w_init

    z_hats = np.empty((m, q), order="F")
    denom = np.empty(q)
    for idx in design.all_indices():
        k = idx.flat0
        col = design.column(idx)
        if q == 1:
            # no other columns to regress on: the instrument is the column
            z = col.astype(float).copy()
        else:
            nodewise = lasso.fit_nodewise(design, idx, nodewise_config)
            z = residual_z(design, idx, nodewise.coef)
        zx = float(z @ col)
        floor = DEGENERATE_RTOL * float(col @ col)
        if abs(zx) < floor or zx == 0.0:
            raise DegenerateDesignError(idx.r, idx.s)
        z_hats[:, k] = z
        denom[k] = zx

    corrections = (z_hats.T @ resid_init) / denom[:, None]
    w_de = w_init + corrections

    resid_sq = np.einsum("tj,tj->j", resid_init, resid_init)
    zz = np.einsum("tk,tk->k", z_hats, z_hats)
    se_flat = np.sqrt(np.outer(zz, resid_sq)) / np.abs(denom)[:, None]

    return DesparsifiedFit(
        a_de=unstack_rows(w_de, d),
        a_init=unstack_rows(w_init, d).copy(),
        se_hat=unstack_rows(se_flat, d),
        z_hats=z_hats,
        denom=denom,
        resid_init=resid_init,
    )


def se_hat(design: LaggedDesign, fit: DesparsifiedFit,
           a_init=None) -> np.ndarray:
    """Plug-in standard errors from a fit's cached instruments.

    Recomputes the initial residuals when an alternative a_init is given;
    otherwise reuses the cache. Returns a (d, p, p) array on the same
    indexing as fit.a_de (multiply by 1/sqrt(n) for coefficient-scale
    standard errors).
    """
    if fit.z_hats is None or fit.denom is None:
        raise ValueError("fit is missing instrument caches")
    if a_init is None:
        resid = fit.resid_init
    else:
        w = stack_rows(np.asarray(a_init, dtype=float))
        resid = design.responses - design.x @ w
    resid_sq = np.einsum("tj,tj->j", resid, resid)
    zz = np.einsum("tk,tk->k", fit.z_hats, fit.z_hats)
    se_flat = np.sqrt(np.outer(zz, resid_sq)) / np.abs(fit.denom)[:, None]
    return unstack_rows(se_flat, design.d)


@dataclass(eq=False)
class AsymptoticSe:
    """Population studentisation quantities for a known model.

    se[s - 1, j - 1, r - 1] is the limit standard deviation of
    sqrt(n) * (a_de - a) for that coefficient. beta_dagger[(s, r)] holds
    the contrast vector of the (variable r, lag s) column, var_z[(s, r)]
    the population instrument variance (the quadratic form the contrast
    attains on the stacked autocovariance)."""

    se: np.ndarray
    beta_dagger: dict
    var_z: dict
    gamma_stacked: np.ndarray
    sigma_eps: np.ndarray


def _population_contrast(g: np.ndarray, k0: int) -> np.ndarray:
    """Contrast with 1 at k0 and minus the population regression of
    column k0 on the others elsewhere."""
    q = g.shape[0]
    keep = np.arange(q) != k0
    sub = g[np.ix_(keep, keep)]
    rhs = g[keep, k0]
    try:
        b = np.linalg.solve(sub, rhs)
    except np.linalg.LinAlgError:
        warnings.warn(
            "stacked autocovariance is singular; using a pseudo-inverse "
            "for the population contrast",
            RuntimeWarning,
        )
        b = np.linalg.pinv(sub) @ rhs
    return np.insert(-b, k0, 1.0)


def asymptotic_se(model: VarModel) -> AsymptoticSe:
    """Population standard errors of the de-biased estimator.

    For each design column the population nodewise residual has variance
    beta' Gamma beta with the contrast of `_population_contrast`; the
    limit of sqrt(n) * (a_de[j, r, s] - a) is normal with standard
    deviation sqrt(sigma_eps[j, j] * beta' Gamma beta) / (Gamma[k0] beta).
    """
    d, p = model.d, model.p
    acov = population_autocov(model, max(d - 1, 0))
    g = acov.stacked(d)

    se = np.empty((d, p, p))
    contrasts: dict = {}
    var_z: dict = {}
    sig_diag = np.diag(model.sigma_eps)
    for s in range(1, d + 1):
        for r in range(1, p + 1):
            k0 = (s - 1) * p + (r - 1)
            bd = _population_contrast(g, k0)
            quad = float(bd @ g @ bd)
            denom = float(g[k0] @ bd)
            contrasts[(s, r)] = bd
            var_z[(s, r)] = quad
            se[s - 1, :, r - 1] = np.sqrt(sig_diag * quad) / denom
    return AsymptoticSe(se=se, beta_dagger=contrasts, var_z=var_z,
                        gamma_stacked=g, sigma_eps=model.sigma_eps.copy())


def asymptotic_cov(model: VarModel, t1: tuple, t2: tuple,
                   ase: AsymptoticSe | None = None) -> float:
    """Limit covariance of sqrt(n) * (a_de - a) at two coefficient
    addresses t = (j, r, s), 1-based.

    The two studentised coordinates are jointly normal; their covariance
    is sigma_eps[j1, j2] * beta_1' Gamma beta_2 divided by the two
    instrument denominators. With t1 == t2 this is the squared
    `asymptotic_se` entry.
    """
    if ase is None:
        ase = asymptotic_se(model)
    j1, r1, s1 = t1
    j2, r2, s2 = t2
    g = ase.gamma_stacked
    b1 = ase.beta_dagger[(s1, r1)]
    b2 = ase.beta_dagger[(s2, r2)]
    p = model.p
    k1 = (s1 - 1) * p + (r1 - 1)
    k2 = (s2 - 1) * p + (r2 - 1)
    den1 = float(g[k1] @ b1)
    den2 = float(g[k2] @ b2)
    num = float(ase.sigma_eps[j1 - 1, j2 - 1] * (b1 @ g @ b2))
    return num / (den1 * den2)
