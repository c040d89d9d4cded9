"""Machine-readable output: JSON-lines reports and CSV tables.

Every report starts with a `meta` record carrying the schema version and
the run configuration. Records are dumped with sorted keys and compact
separators, so identical runs produce byte-identical files. All numeric
fields are checked to be finite before writing.
"""

from __future__ import annotations

import json
import math

import numpy as np

SCHEMA_VERSION = 1


def _plain(value):
    """Convert numpy scalars/arrays and tuples into JSON-native types."""
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def _check_finite(value, where: str) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value in report field {where}: {value}")
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _check_finite(v, f"{where}[{i}]")
    elif isinstance(value, dict):
        for k, v in value.items():
            _check_finite(v, f"{where}.{k}")


def meta_record(command: str, config: dict, seed, **extra) -> dict:
    from . import __version__

    rec = {
        "record": "meta",
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": _plain(config),
        "seed": _plain(seed),
        "version": __version__,
    }
    rec.update({k: _plain(v) for k, v in extra.items()})
    return rec


def ci_record(interval) -> dict:
    return {
        "record": "target_ci",
        "target": list(interval.target),
        "estimate": float(interval.estimate),
        "se": float(interval.se),
        "ci_lower": float(interval.lower),
        "ci_upper": float(interval.upper),
        "level": float(interval.level),
    }


def fit_record(target, a_init: float, estimate: float, se: float) -> dict:
    return {
        "record": "coefficient",
        "target": list(target),
        "a_init": float(a_init),
        "estimate": float(estimate),
        "se": float(se),
    }


def test_record(result, lam: float | None = None) -> dict:
    rec = {
        "record": "test",
        "t_obs": float(result.statistic),
        "crit": float(result.critical_value),
        "p_value": float(result.p_value),
        "reject": bool(result.reject),
        "alpha": float(result.alpha),
        "argmax": list(result.argmax),
        "b_effective": int(result.b_requested - result.rejected_replicates),
        "rejected_replicates": int(result.rejected_replicates),
    }
    if lam is not None:
        rec["lambda"] = float(lam)
    return rec


def format_records(records) -> str:
    lines = []
    for rec in records:
        plain = _plain(rec)
        _check_finite(plain, plain.get("record", "record"))
        lines.append(json.dumps(plain, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_records(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_records(records))


def load_records(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _cell(value) -> str:
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return str(int(value))
    return str(value)


def format_table(header, rows) -> str:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table(header, rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_table(header, rows))


def matrix_table(matrix: np.ndarray) -> tuple[list, list]:
    """Header and rows for a (p, p) matrix laid out like the coverage
    tables: rows are equations j, columns regressors r."""
    matrix = np.asarray(matrix)
    p = matrix.shape[1]
    header = ["j\\r"] + [f"r{r}" for r in range(1, p + 1)]
    rows = [[f"j{j + 1}", *matrix[j]] for j in range(matrix.shape[0])]
    return header, rows
