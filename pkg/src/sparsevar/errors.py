"""Exception hierarchy for sparsevar.

Two broad families matter for the CLI exit-code mapping: input/format
problems (files that cannot be parsed, malformed flag values) and numeric
failures (unstable models, degenerate designs, series too short to fit).
"""

from __future__ import annotations


class SparseVarError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModelError(SparseVarError):
    """Model matrices are malformed: wrong shapes, non-finite entries,
    or an innovation covariance that is not symmetric positive
    semi-definite."""


class UnstableModelError(SparseVarError):
    """The companion matrix has spectral radius >= 1 - margin, so the
    process has no stationary solution and cannot be simulated."""


class SizeError(SparseVarError):
    """The series is too short for the requested lag order."""


class DegenerateDesignError(SparseVarError):
    """An instrument is numerically orthogonal to its own column, so the
    de-biasing correction for that coordinate is undefined."""

    def __init__(self, r: int, s: int, message: str | None = None):
        self.r = r
        self.s = s
        super().__init__(
            message
            or f"degenerate instrument for column (variable {r}, lag {s}): "
            "residual is numerically orthogonal to the column itself"
        )


class ParseError(SparseVarError):
    """A model-spec, series CSV, or group file could not be parsed."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, col: int | None = None):
        self.path = path
        self.line = line
        self.col = col
        loc = ""
        if path is not None:
            loc = str(path)
            if line is not None:
                loc += f":{line}"
                if col is not None:
                    loc += f":{col}"
            loc = loc + ": "
        super().__init__(loc + message)
