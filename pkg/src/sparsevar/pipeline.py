"""End-to-end estimation pipeline.

One call runs: lasso row regressions -> nodewise instruments and
de-biased estimates with standard errors -> thresholded coefficient
matrix -> residual covariance -> thresholded covariance and generating
model for the bootstrap. The confidence-interval and testing code both
consume this, so every statistic in the package flows through the same
sequence of definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import design as design_mod
from . import lasso
from .bootstrap import ThresholdedModel, sigma_eps_hat, threshold_model, threshold_sigma
from .desparsify import DesparsifiedFit, desparsify_all
from .varmodel import TimeSeries


@dataclass(frozen=True)
class PipelineConfig:
    """Tuning parameters for the full pipeline.

    d            lag order of the fitted model.
    lam          lasso penalty for the row regressions.
    lam_z        penalty for the nodewise (instrument) regressions;
                 defaults to lam.
    a_n          coefficient threshold for the bootstrap generating
                 model; defaults to lam.
    lambda_eps   hard threshold for the residual covariance; required by
                 the thresholding stage (confidence intervals, tests).
    burn_in      burn-in for bootstrap pseudo-series; defaults to 50*d.
    standardize  pass column standardisation down to every lasso solve;
                 off by default and in all replication runs.
    """

    d: int
    lam: float
    lam_z: float | None = None
    a_n: float | None = None
    lambda_eps: float | None = None
    max_iter: int = 10000
    tol: float = 1e-8
    burn_in: int | None = None
    standardize: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"lag order must be >= 1, got {self.d}")

    def lasso_config(self) -> lasso.LassoConfig:
        return lasso.LassoConfig(lam=self.lam, max_iter=self.max_iter,
                                 tol=self.tol, standardize=self.standardize)

    def nodewise_config(self) -> lasso.LassoConfig:
        lam = self.lam if self.lam_z is None else self.lam_z
        return lasso.LassoConfig(lam=lam, max_iter=self.max_iter,
                                 tol=self.tol, standardize=self.standardize)

    @property
    def threshold(self) -> float:
        return self.lam if self.a_n is None else self.a_n

    def with_lam(self, lam: float) -> "PipelineConfig":
        """Copy with a new penalty; lam_z and a_n keep tracking lam when
        they were defaulted."""
        return replace(self, lam=lam)


@dataclass(eq=False)
class PipelineFit:
    """Everything the pipeline produces for one series."""

    design: design_mod.LaggedDesign
    config: PipelineConfig
    fit: DesparsifiedFit
    a_thr: np.ndarray | None = None
    sigma_hat: np.ndarray | None = None
    sigma_thr: np.ndarray | None = None
    model_thr: ThresholdedModel | None = None

    @property
    def a_init(self) -> np.ndarray:
        return self.fit.a_init

    @property
    def a_de(self) -> np.ndarray:
        return self.fit.a_de

    @property
    def se_hat(self) -> np.ndarray:
        return self.fit.se_hat


def frozen_masks(group, p: int, d: int) -> dict[int, np.ndarray]:
    """Boolean masks (one per affected row j) pinning the stacked
    coordinates of a coefficient group at zero."""
    masks: dict[int, np.ndarray] = {}
    for (j, r, s) in group:
        if not (1 <= j <= p and 1 <= r <= p and 1 <= s <= d):
            raise IndexError(
                f"group entry (j={j}, r={r}, s={s}) outside 1..{p} x 1..{p} x 1..{d}"
            )
        mask = masks.setdefault(j, np.zeros(p * d, dtype=bool))
        mask[(s - 1) * p + (r - 1)] = True
    return masks


def estimate_design(design: design_mod.LaggedDesign, config: PipelineConfig,
                    group=None, with_threshold: bool = True) -> PipelineFit:
    """Run the pipeline on a prebuilt design.

    group, when given, is a GroupSpec (or anything with a_entries /
    sigma_entries): its coefficient entries are frozen at zero in the row
    regressions and its covariance entries are zeroed in the residual
    covariance before thresholding. That is the restricted fit used to
    generate null pseudo-series.

    with_threshold=False stops after the de-biased estimates and standard
    errors (all a bootstrap replicate of a confidence interval needs).
    """
    if design.d != config.d:
        raise ValueError(f"design has lag order {design.d}, config says {config.d}")
    p, d = design.p, design.d

    a_entries = tuple(getattr(group, "a_entries", ())) if group is not None else ()
    sigma_entries = tuple(getattr(group, "sigma_entries", ())) if group is not None else ()

    masks = frozen_masks(a_entries, p, d) if a_entries else None
    a_init = lasso.fit_system(design, config.lasso_config(), frozen_rows=masks)
    dfit = desparsify_all(design, a_init, config.nodewise_config())

    result = PipelineFit(design=design, config=config, fit=dfit)
    if not with_threshold:
        return result

    result.a_thr = threshold_model(a_init, dfit.a_de, config.threshold)
    result.sigma_hat = sigma_eps_hat(design, result.a_thr)
    if config.lambda_eps is None:
        raise ValueError(
            "lambda_eps is required to threshold the residual covariance"
        )
    sigma_for_model = result.sigma_hat
    if sigma_entries:
        sigma_for_model = sigma_for_model.copy()
        for (i, j) in sigma_entries:
            if not (1 <= i <= p and 1 <= j <= p):
                raise IndexError(f"covariance entry ({i}, {j}) outside 1..{p}")
            sigma_for_model[i - 1, j - 1] = 0.0
            sigma_for_model[j - 1, i - 1] = 0.0
    result.sigma_thr = threshold_sigma(sigma_for_model, config.lambda_eps)
    result.model_thr = ThresholdedModel(
        a_thr=result.a_thr, sigma_thr=result.sigma_thr,
        a_n=config.threshold, lambda_eps=config.lambda_eps,
    )
    return result


def estimate(ts: TimeSeries | np.ndarray, config: PipelineConfig,
             group=None, with_threshold: bool = True,
             center: bool = False) -> PipelineFit:
    """Build the lagged design from a series and run the pipeline.

    center=True subtracts column means first (for observed data; the
    model has no intercept)."""
    data = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)
    if center:
        data = data - data.mean(axis=0, keepdims=True)
    design = design_mod.build(data, config.d)
    return estimate_design(design, config, group=group,
                           with_threshold=with_threshold)
