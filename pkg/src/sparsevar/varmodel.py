"""VAR(d) model container, stability checks, simulation, and population
autocovariances.

A model is the pair (A_1..A_d, Sigma_eps) for

    x_t = A_1 x_{t-1} + ... + A_d x_{t-d} + eps_t,   eps_t ~ N(0, Sigma_eps).

Stability is judged on the companion matrix: the process has a stationary
causal solution iff the companion spectral radius is below one. All
stochastic draws go through the stream-addressed generators in
`sparsevar.rng`, so results are reproducible for a fixed seed and
independent of process scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._kernels import var_recursion
from .errors import InvalidModelError, SizeError, UnstableModelError

SYMMETRY_TOL = 1e-10
PSD_TOL = -1e-10
STABILITY_MARGIN = 1e-8
LYAPUNOV_RTOL = 1e-12


def _as_coeff_array(coeffs) -> np.ndarray:
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 2:
        a = a[None, :, :]
    if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[0] < 1:
        raise InvalidModelError(
            f"coefficients must be a d-list of square p x p matrices, got shape {a.shape}"
        )
    if not np.isfinite(a).all():
        raise InvalidModelError("coefficient matrices contain non-finite entries")
    return a


def validate_covariance(sigma, p: int | None = None) -> np.ndarray:
    """Check symmetry and positive semi-definiteness of an innovation
    covariance. Returns the validated array."""
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidModelError(f"covariance must be square, got shape {s.shape}")
    if p is not None and s.shape[0] != p:
        raise InvalidModelError(
            f"covariance is {s.shape[0]} x {s.shape[0]} but the model has p = {p}"
        )
    if not np.isfinite(s).all():
        raise InvalidModelError("covariance contains non-finite entries")
    if np.abs(s - s.T).max() > SYMMETRY_TOL:
        raise InvalidModelError("covariance is not symmetric")
    if s.shape[0] > 0:
        w = np.linalg.eigvalsh(0.5 * (s + s.T))
        if w.min() < PSD_TOL:
            raise InvalidModelError(
                f"covariance has negative eigenvalue {w.min():.3e}"
            )
    return s


def innovation_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular-like factor L with L @ L.T = sigma.

    Uses Cholesky when the matrix is numerically positive definite and
    falls back to an eigenvalue factorisation for the semi-definite
    boundary. Eigenvalues below the symmetry floor are an error (callers
    validate first, so this is a backstop)."""
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (sigma + sigma.T))
        if w.min() < PSD_TOL:
            raise InvalidModelError(
                f"covariance has negative eigenvalue {w.min():.3e}"
            ) from None
        return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(eq=False)
class VarModel:
    """Coefficients and innovation covariance of a VAR(d) process.

    coeffs is stored as a (d, p, p) array; coeffs[s - 1] is the lag-s
    matrix. Treated as immutable after construction (the arrays are
    marked read-only)."""

    coeffs: np.ndarray
    sigma_eps: np.ndarray

    def __post_init__(self):
        a = _as_coeff_array(self.coeffs)
        s = validate_covariance(self.sigma_eps, p=a.shape[1])
        a = a.copy()
        s = s.copy()
        a.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "sigma_eps", s)
        self._radius: float | None = None
        self._factor: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.coeffs.shape[1]

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    def spectral_radius(self) -> float:
        if self._radius is None:
            self._radius = spectral_radius(companion_matrix(self.coeffs))
        return self._radius

    def _innovation_factor(self) -> np.ndarray:
        if self._factor is None:
            self._factor = innovation_factor(self.sigma_eps)
        return self._factor

    def coef_rows(self) -> np.ndarray:
        """(p, p*d) view used by the simulator: row j holds variable j's
        coefficients, lag-major."""
        d, p, _ = self.coeffs.shape
        return self.coeffs.transpose(1, 0, 2).reshape(p, d * p)


@dataclass(eq=False)
class TimeSeries:
    """An observed (or simulated) n x p sample path."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InvalidModelError(f"series must be 2-dimensional, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise InvalidModelError("series contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def companion_matrix(coeffs) -> np.ndarray:
    """(p*d) x (p*d) companion form: coefficient blocks across the top,
    shifted identity below."""
    a = _as_coeff_array(coeffs)
    d, p, _ = a.shape
    f = np.zeros((p * d, p * d))
    for s in range(d):
        f[:p, s * p:(s + 1) * p] = a[s]
    if d > 1:
        f[p:, :p * (d - 1)] = np.eye(p * (d - 1))
    return f


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvals(mat)).max())


def is_stable(model: VarModel, margin: float = STABILITY_MARGIN) -> bool:
    """True when the companion spectral radius is below 1 - margin."""
    return model.spectral_radius() < 1.0 - margin


def simulate(model: VarModel, n: int, burn_in: int | None = None,
             seed=0) -> TimeSeries:
    """Draw an n x p sample path with Gaussian innovations.

    The recursion starts from a zero pre-sample and discards `burn_in`
    initial observations (default 50*d) so the retained block is close
    to stationarity. Deterministic in (seed): the innovation draw is a
    single generator call, so the path does not depend on how the caller
    schedules work.
    """
    if n < 1:
        raise SizeError(f"series length must be positive, got {n}")
    if not is_stable(model):
        raise UnstableModelError(
            f"companion spectral radius {model.spectral_radius():.6f} is not "
            f"below 1 - {STABILITY_MARGIN:g}"
        )
    if burn_in is None:
        burn_in = 50 * model.d
    if burn_in < 0:
        raise SizeError(f"burn-in must be non-negative, got {burn_in}")

    gen = _rng.generator(seed)
    total = burn_in + n
    innov = gen.standard_normal((total, model.p)) @ model._innovation_factor().T
    path = var_recursion(model.coef_rows(), innov, model.d)
    return TimeSeries(path[burn_in:])


@dataclass(eq=False)
class AutocovSet:
    """Autocovariances Gamma(0..h_max) of a stationary VAR.

    gamma(h) = Cov(x_t, x_{t-h}); negative lags resolve through
    gamma(-h) = gamma(h)'. """

    gammas: np.ndarray  # (h_max + 1, p, p)

    @property
    def h_max(self) -> int:
        return self.gammas.shape[0] - 1

    @property
    def p(self) -> int:
        return self.gammas.shape[1]

    def gamma(self, h: int) -> np.ndarray:
        if abs(h) > self.h_max:
            raise ValueError(f"lag {h} exceeds h_max = {self.h_max}")
        if h >= 0:
            return self.gammas[h]
        return self.gammas[-h].T

    def stacked(self, lags: int) -> np.ndarray:
        """Covariance of the stacked vector (x_{t-1}, ..., x_{t-lags}):
        block (i, k) equals gamma(k - i). Matches the population limit of
        the lagged design's (1/m) X'X."""
        if lags < 1 or lags - 1 > self.h_max:
            raise ValueError(f"need gamma up to lag {lags - 1}, have {self.h_max}")
        p = self.p
        out = np.empty((p * lags, p * lags))
        for i in range(lags):
            for k in range(lags):
                out[i * p:(i + 1) * p, k * p:(k + 1) * p] = self.gamma(k - i)
        return out


def population_autocov(model: VarModel, h_max: int) -> AutocovSet:
    """Autocovariances of the stationary solution.

    Solves the companion-form stationary equation S = F S F' + Sigma by
    iterative doubling (quadratic convergence; iterates until the update
    is below a 1e-12 relative tolerance), then extends to positive lags
    through the companion recursion Gamma~(h) = F Gamma~(h-1).
    """
    if h_max < 0:
        raise ValueError(f"h_max must be non-negative, got {h_max}")
    if not is_stable(model):
        raise UnstableModelError(
            "autocovariances are undefined: companion spectral radius "
            f"{model.spectral_radius():.6f} is not below 1"
        )
    p, d = model.p, model.d
    f = companion_matrix(model.coeffs)
    sig = np.zeros((p * d, p * d))
    sig[:p, :p] = model.sigma_eps

    # Doubling: after k steps S = sum_{i < 2^k} F^i Sigma (F^i)'.
    s = sig.copy()
    power = f.copy()
    for _ in range(200):
        update = power @ s @ power.T
        s += update
        norm = np.abs(s).max()
        if norm == 0.0 or np.abs(update).max() <= LYAPUNOV_RTOL * norm:
            break
        power = power @ power
    s = 0.5 * (s + s.T)

    gammas = np.empty((h_max + 1, p, p))
    block = s
    gammas[0] = 0.5 * (block[:p, :p] + block[:p, :p].T)
    for h in range(1, h_max + 1):
        block = f @ block
        gammas[h] = block[:p, :p]
    return AutocovSet(gammas)
