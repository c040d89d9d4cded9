"""File formats: model specs, series CSV, and test-group files.

Model spec (plain text, diff-friendly). One section per lag matrix plus
the innovation covariance, rows whitespace-separated:

    [A1]
    0.8 0.0
    0.0 0.5
    [SIGMA]
    1.0 0.0
    0.0 1.0

Series CSV: header ``var1,...,varp``, one row per time point, time
increasing downward, no index column. Floats are written with `repr`, so
write -> read -> write is byte-identical.

Group file for zero tests, 1-based indices:

    [GA]
    6 1 1      # coefficient (j, r, s): variable r at lag s in row j
    [GSIGMA]
    1 6        # innovation covariance entry (i, j)
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ParseError
from .testing import GroupSpec
from .varmodel import TimeSeries, VarModel

_TOKEN = re.compile(r"\S+")
_SECTION = re.compile(r"^\[([A-Za-z0-9]+)\]$")


def _tokens(line: str):
    """(column, text) pairs for each whitespace-separated token."""
    return [(m.start() + 1, m.group()) for m in _TOKEN.finditer(line)]


def _strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def _float_token(tok: str, path: str, lineno: int, col: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", path, lineno, col) from None


def _int_token(tok: str, path: str, lineno: int, col: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", path, lineno, col) from None


def _parse_sections(text: str, path: str):
    """Split sectioned text into {name: [(lineno, [(col, tok), ...])]}.

    Keeps every non-empty data line with its position so callers can
    point at the offending token.
    """
    sections: dict[str, list] = {}
    order: list[str] = []
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION.match(line.strip())
        if m:
            name = m.group(1).upper()
            if name in sections:
                raise ParseError(f"duplicate section [{name}]", path, lineno, 1)
            sections[name] = []
            order.append(name)
            current = name
            continue
        if current is None:
            col = _tokens(line)[0][0]
            raise ParseError("data before any section header", path, lineno, col)
        sections[current].append((lineno, _tokens(line)))
    return sections, order


def _rows_to_matrix(rows, path: str, name: str) -> np.ndarray:
    if not rows:
        raise ParseError(f"section [{name}] has no rows", path)
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for i, (lineno, toks) in enumerate(rows):
        if len(toks) != width:
            raise ParseError(
                f"row has {len(toks)} entries, expected {width}",
                path, lineno, toks[0][0],
            )
        for k, (col, tok) in enumerate(toks):
            out[i, k] = _float_token(tok, path, lineno, col)
    return out


def parse_model(text: str, path: str = "<string>") -> VarModel:
    """Parse a model spec into a VarModel (validates shapes and sigma)."""
    sections, order = _parse_sections(text, path)
    lag_names = [n for n in order if n != "SIGMA"]
    for name in lag_names:
        if not re.fullmatch(r"A[1-9][0-9]*", name):
            raise ParseError(f"unknown section [{name}]", path)
    if "SIGMA" not in sections:
        raise ParseError("missing [SIGMA] section", path)
    if not lag_names:
        raise ParseError("no lag sections [A1]..[Ad] found", path)
    d = max(int(n[1:]) for n in lag_names)
    expected = [f"A{s}" for s in range(1, d + 1)]
    missing = [n for n in expected if n not in sections]
    if missing:
        raise ParseError(f"missing section [{missing[0]}]", path)

    mats = [_rows_to_matrix(sections[n], path, n) for n in expected]
    sigma = _rows_to_matrix(sections["SIGMA"], path, "SIGMA")
    p = mats[0].shape[1]
    for n, mat in zip(expected + ["SIGMA"], mats + [sigma]):
        if mat.shape != (p, p):
            lineno = sections[n][0][0]
            raise ParseError(
                f"section [{n}] is {mat.shape[0]}x{mat.shape[1]}, expected {p}x{p}",
                path, lineno, 1,
            )
    return VarModel(np.stack(mats), sigma)


def read_model(path) -> VarModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), str(path))


def format_model(model: VarModel) -> str:
    lines = []
    for s in range(1, model.d + 1):
        lines.append(f"[A{s}]")
        for row in model.coeffs[s - 1]:
            lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("[SIGMA]")
    for row in model.sigma_eps:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_model(model: VarModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_model(model))


def format_series(ts: TimeSeries) -> str:
    header = ",".join(f"var{i}" for i in range(1, ts.p + 1))
    lines = [header]
    for row in ts.values:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def write_series(ts: TimeSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_series(ts))


def parse_series(text: str, path: str = "<string>") -> TimeSeries:
    """Parse a series CSV. Any header names are accepted; every data cell
    must be numeric and every row must match the header width."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty series file", path, 1, 1)
    header = lines[0].split(",")
    p = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != p:
            raise ParseError(
                f"row has {len(cells)} cells, expected {p}", path, lineno, 1,
            )
        row = np.empty(p)
        for k, cell in enumerate(cells):
            try:
                row[k] = float(cell)
            except ValueError:
                col = sum(len(c) + 1 for c in cells[:k]) + 1
                raise ParseError(
                    f"expected a number, got {cell.strip()!r}",
                    path, lineno, col,
                ) from None
        rows.append(row)
    if not rows:
        raise ParseError("series file has a header but no rows", path, 1, 1)
    return TimeSeries(np.array(rows))


def read_series(path) -> TimeSeries:
    with open(path, encoding="utf-8") as fh:
        return parse_series(fh.read(), str(path))


def parse_group(text: str, path: str = "<string>") -> GroupSpec:
    """Parse a group file into a GroupSpec.

    [GA] rows are (j, r, s) coefficient triples, [GSIGMA] rows are (i, j)
    covariance pairs; both sections are optional but at least one entry
    must be present overall.
    """
    sections, order = _parse_sections(text, path)
    unknown = [n for n in order if n not in ("GA", "GSIGMA")]
    if unknown:
        raise ParseError(f"unknown section [{unknown[0]}]", path)

    a_entries = []
    for lineno, toks in sections.get("GA", []):
        if len(toks) != 3:
            raise ParseError(
                f"[GA] row needs 3 indices (j r s), got {len(toks)}",
                path, lineno, toks[0][0],
            )
        a_entries.append(tuple(_int_token(t, path, lineno, c) for c, t in toks))
    sigma_entries = []
    for lineno, toks in sections.get("GSIGMA", []):
        if len(toks) != 2:
            raise ParseError(
                f"[GSIGMA] row needs 2 indices (i j), got {len(toks)}",
                path, lineno, toks[0][0],
            )
        sigma_entries.append(tuple(_int_token(t, path, lineno, c) for c, t in toks))
    try:
        return GroupSpec(a_entries=tuple(a_entries),
                         sigma_entries=tuple(sigma_entries))
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


def read_group(path) -> GroupSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_group(fh.read(), str(path))


def format_group(group: GroupSpec) -> str:
    lines = []
    if group.a_entries:
        lines.append("[GA]")
        lines.extend(f"{j} {r} {s}" for (j, r, s) in group.a_entries)
    if group.sigma_entries:
        lines.append("[GSIGMA]")
        lines.extend(f"{i} {j}" for (i, j) in group.sigma_entries)
    return "\n".join(lines) + "\n"


def write_group(group: GroupSpec, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_group(group))
