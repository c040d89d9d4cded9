"""De-biased lasso inference for sparse high-dimensional VAR models.

The package estimates VAR(d) coefficient matrices by row-wise lasso,
corrects each coefficient with a nodewise-regression instrument, and
calibrates confidence intervals and max-type group-zero tests with a
model bootstrap built on thresholded estimates. A Monte-Carlo harness
(`sparsevar.replicate`, also exposed through the CLI) reproduces the
accompanying simulation studies.
"""

from .bootstrap import (
    BootstrapRun,
    ConfidenceInterval,
    ThresholdedModel,
    generate,
    run,
    sigma_eps_hat,
    threshold_model,
    threshold_sigma,
)
from .design import ColumnIndex, LaggedDesign, build, drop_column
from .desparsify import (
    AsymptoticSe,
    DesparsifiedFit,
    asymptotic_cov,
    asymptotic_se,
    desparsify_all,
    residual_z,
    se_hat,
)
from .errors import (
    DegenerateDesignError,
    InvalidModelError,
    ParseError,
    SizeError,
    SparseVarError,
    UnstableModelError,
)
from .io import (
    read_group,
    read_model,
    read_series,
    write_group,
    write_model,
    write_series,
)
from .lasso import LassoConfig, LassoFit, fit, fit_nodewise, fit_row, fit_system
from .pipeline import PipelineConfig, PipelineFit, estimate, estimate_design
from .replicate import CoverageStudy, TestStudy, run_coverage_study, run_test_study
from .testing import GroupSpec, TestResult, bootstrap_test, restricted_fit, t_stat, tau2_hat
from .varmodel import (
    AutocovSet,
    TimeSeries,
    VarModel,
    companion_matrix,
    is_stable,
    population_autocov,
    simulate,
    spectral_radius,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
