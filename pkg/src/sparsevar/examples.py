"""Built-in example models for demos, simulation studies, and tests.

Example 1 is a sparse 6-variable VAR(1) with one persistent pair of
diagonal entries and a weakly cross-correlated innovation covariance.
Example 2 embeds Example 1 as the lower-right block of a 20-variable
VAR(1) whose upper 14 variables form an autonomous block, so the
lower-left block B carries every cross-block dependency; the test group
G asks whether the first six variables depend on the last fourteen.
"""

from __future__ import annotations

import numpy as np

from .testing import GroupSpec
from .varmodel import VarModel


def _example1_a() -> np.ndarray:
    a = np.zeros((6, 6))
    a[0, 0] = 0.8
    a[1, 3] = 0.3
    a[2, 4] = -0.3
    a[3, 0] = 0.6
    a[4, 2] = 0.6
    a[5, 5] = 0.8
    return a


def _example1_sigma(cross: float = 0.08) -> np.ndarray:
    s = np.eye(6)
    first = [0.25, 0.17, 0.12, 0.10, cross]
    s[0, 1:] = first
    s[1:, 0] = first
    return s


def example1_model() -> VarModel:
    """The base 6-variable model used for the coverage study."""
    return VarModel(_example1_a(), _example1_sigma())


def example1_test_model(delta_a: float = 0.0, delta_c: float = 0.0) -> VarModel:
    """Example 1 variant for the test study.

    The tested entries are coefficient (6, 1) and innovation covariance
    (1, 6): the null model has both at zero, and the alternatives set
    them to delta_a and delta_c.
    """
    a = _example1_a()
    a[5, 0] = delta_a
    return VarModel(a, _example1_sigma(cross=delta_c))


def example1_group() -> GroupSpec:
    """Row 6 of the coefficient matrix (all lags-1 entries on variables
    1..5) plus the (1, 6) innovation covariance."""
    return GroupSpec(
        a_entries=tuple((6, r, 1) for r in range(1, 6)),
        sigma_entries=((1, 6),),
    )


_EXAMPLE2_D_DIAG = (0.8, -0.7, 0.8, -0.6, 0.6, 0.0, 0.0,
                    0.0, 0.0, 0.2, 0.5, -0.8, 0.0, 0.0)


def _example2_b() -> np.ndarray:
    b = np.zeros((6, 14))
    b[0, 0], b[0, 1], b[0, 2] = 0.8, 0.2, -0.4
    b[1, 1], b[1, 2], b[1, 5] = 0.6, -0.7, 0.8
    b[2, 3], b[2, 9] = -0.9, -0.6
    b[3, 3], b[3, 6] = 0.8, 0.2
    b[4, 1], b[4, 5], b[4, 13] = 0.7, -0.3, -0.7
    b[5, 0], b[5, 8] = 0.3, 0.9
    return b


def _example2_sigma11() -> np.ndarray:
    s = np.eye(14)
    for i in range(4):          # band of +0.5 across variables 1..5
        s[i, i + 1] = 0.5
        s[i + 1, i] = 0.5
    for i in (9, 10):           # band of -0.5 across variables 10..12
        s[i, i + 1] = -0.5
        s[i + 1, i] = -0.5
    return s


def example2_model(tested_entries: dict | None = None) -> VarModel:
    """The 20-variable block model.

    The coefficient matrix is [[D, 0], [B, C]] with D diagonal and C the
    Example 1 coefficient matrix, so under the null the first six
    variables depend on nobody but themselves. tested_entries maps
    (j, r) full-matrix positions with j in 1..6 and r in 7..20 (the
    region the test group covers, zero under the null) to values.
    """
    a = np.zeros((20, 20))
    a[:14, :14] = np.diag(_EXAMPLE2_D_DIAG)
    a[14:, :14] = _example2_b()
    a[14:, 14:] = _example1_a()
    if tested_entries:
        for (j, r), val in tested_entries.items():
            if not (1 <= j <= 6 and 7 <= r <= 20):
                raise ValueError(
                    f"alternative entry ({j}, {r}) outside the tested block"
                )
            a[j - 1, r - 1] = val
    sigma = np.zeros((20, 20))
    sigma[:14, :14] = _example2_sigma11()
    sigma[14:, 14:] = _example1_sigma()
    return VarModel(a, sigma)


def example2_alternative(kind: str, delta: float) -> VarModel:
    """Alternatives for the Example 2 test: 'single' sets one tested
    entry to delta; 'five' spreads delta over five tested entries."""
    if kind == "single":
        entries = {(6, 15): delta}
    elif kind == "five":
        entries = {(6, 15): delta, (3, 18): delta, (4, 14): delta,
                   (1, 11): delta, (3, 13): delta}
    else:
        raise ValueError(f"unknown alternative kind {kind!r}")
    return example2_model(tested_entries=entries)


def example2_group() -> GroupSpec:
    """All lag-1 coefficients of variables 1..6 on variables 7..20."""
    return GroupSpec(
        a_entries=tuple((j, r, 1) for j in range(1, 7) for r in range(7, 21)),
    )


def by_number(number: int) -> VarModel:
    if number == 1:
        return example1_model()
    if number == 2:
        return example2_model()
    raise ValueError(f"unknown example number {number}; available: 1, 2")
