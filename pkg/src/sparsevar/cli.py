"""Command-line interface.

Subcommands: simulate | fit | ci | test | replicate. Reports are JSON
lines (one meta record followed by result records); replication runs
emit CSV tables plus a metadata JSON. Figures are rendered next to the
main output file unless --no-figures is given.

Exit codes: 0 success, 2 usage or input-format error, 3 numeric failure
(instability, degenerate design, and similar).

SPARSEVAR_THREADS overrides --workers when set.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, examples, figures, io, report
from . import pipeline as pipeline_mod
from . import replicate as replicate_mod
from . import testing as testing_mod
from .errors import ParseError, SparseVarError
from .varmodel import VarModel, simulate as simulate_model


def _workers(value: int) -> int:
    env = os.environ.get("SPARSEVAR_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise click.UsageError(
                f"SPARSEVAR_THREADS must be an integer, got {env!r}"
            ) from None
    if value < 1:
        raise click.UsageError(f"worker count must be positive, got {value}")
    return value


def _guard(fn):
    """Map domain errors to the documented exit codes."""

    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            raise click.UsageError(str(exc)) from exc
        except SparseVarError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapped


def _load_model(model_path, example) -> VarModel:
    if (model_path is None) == (example is None):
        raise click.UsageError("give exactly one of --model or --example")
    if model_path is not None:
        return io.read_model(model_path)
    return examples.by_number(example)


def _pipeline_config(d, lam, lambda_eps, a_n, max_iter, tol, burn_in,
                     standardize=False) -> pipeline_mod.PipelineConfig:
    return pipeline_mod.PipelineConfig(
        d=d, lam=lam, lambda_eps=lambda_eps, a_n=a_n,
        max_iter=max_iter, tol=tol, burn_in=burn_in,
        standardize=standardize,
    )


def _parse_targets(spec: str, p: int, d: int) -> list:
    if spec.strip().lower() == "all":
        return [(j, r, s)
                for s in range(1, d + 1)
                for j in range(1, p + 1)
                for r in range(1, p + 1)]
    out = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        if len(bits) != 3:
            raise click.UsageError(
                f"target {part!r} must be j,r,s (three comma-separated indices)"
            )
        try:
            j, r, s = (int(b) for b in bits)
        except ValueError:
            raise click.UsageError(f"target {part!r} has non-integer indices") from None
        if not (1 <= j <= p and 1 <= r <= p and 1 <= s <= d):
            raise click.UsageError(
                f"target ({j},{r},{s}) outside 1..{p} x 1..{p} x 1..{d}"
            )
        out.append((j, r, s))
    if not out:
        raise click.UsageError("no targets given")
    return out


def _config_dict(cfg: pipeline_mod.PipelineConfig, **extra) -> dict:
    out = {
        "d": cfg.d, "lambda": cfg.lam, "lambda_z": cfg.lam_z,
        "a_n": cfg.threshold, "lambda_eps": cfg.lambda_eps,
        "max_iter": cfg.max_iter, "tol": cfg.tol, "burn_in": cfg.burn_in,
        "standardize": cfg.standardize,
    }
    out.update(extra)
    return out


def _estimation_options(fn):
    for opt in reversed([
        click.option("--d", type=int, default=1, show_default=True,
                     help="VAR lag order."),
        click.option("--lambda", "lam", type=float, required=True,
                     help="Row-regression penalty (also the default for "
                          "the instrument fits and the threshold)."),
        click.option("--lambda-z", type=float, default=None,
                     help="Instrument-regression penalty (default: --lambda)."),
        click.option("--lambda-eps", type=float, default=None,
                     help="Innovation-covariance threshold."),
        click.option("--a-n", type=float, default=None,
                     help="Coefficient threshold (default: --lambda)."),
        click.option("--max-iter", type=int, default=10000, show_default=True),
        click.option("--tol", type=float, default=1e-8, show_default=True),
        click.option("--center", is_flag=True,
                     help="Subtract column means before fitting."),
        click.option("--standardize", is_flag=True,
                     help="Scale design columns to unit RMS inside the "
                          "solvers (off in replication runs)."),
    ]):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="sparsevar")
def main():
    """De-sparsified lasso inference for sparse VAR models."""


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
              help="Model-spec file with [A1]..[Ad] and [SIGMA] sections.")
@click.option("--example", type=click.IntRange(1, 2),
              help="Use a built-in simulation model instead of a file.")
@click.option("--n", type=int, required=True, help="Series length.")
@click.option("--burn-in", type=int, default=None,
              help="Pre-sample length discarded before the kept stretch.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output CSV path.")
@_guard
def simulate(model_path, example, n, burn_in, seed, out):
    """Simulate a series from a VAR model and write it as CSV."""
    model = _load_model(model_path, example)
    ts = simulate_model(model, n, burn_in=burn_in, seed=seed)
    io.write_series(ts, out)
    click.echo(f"wrote {ts.n} x {ts.p} series to {out}")


@main.command()
@click.argument("series", type=click.Path(exists=True, dir_okay=False))
@_estimation_options
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Report path (JSON lines).")
@_guard
def fit(series, d, lam, lambda_z, lambda_eps, a_n, max_iter, tol, center,
        standardize, out):
    """Point estimates: initial lasso, de-biased coefficients, standard
    errors, and the innovation covariance estimate."""
    ts = io.read_series(series)
    cfg = pipeline_mod.PipelineConfig(
        d=d, lam=lam, lam_z=lambda_z, lambda_eps=lambda_eps, a_n=a_n,
        max_iter=max_iter, tol=tol, standardize=standardize,
    )
    from .bootstrap import sigma_eps_hat, threshold_model

    fitres = pipeline_mod.estimate(ts, cfg, with_threshold=False, center=center)
    a_thr = threshold_model(fitres.a_init, fitres.a_de, cfg.threshold)
    sigma = sigma_eps_hat(fitres.design, a_thr)
    records = [report.meta_record(
        "fit", _config_dict(cfg, center=center), seed=None,
        series=str(series), n=ts.n, p=ts.p,
    )]
    for s in range(1, d + 1):
        for j in range(1, ts.p + 1):
            for r in range(1, ts.p + 1):
                records.append(report.fit_record(
                    (j, r, s),
                    fitres.a_init[s - 1, j - 1, r - 1],
                    fitres.a_de[s - 1, j - 1, r - 1],
                    fitres.se_hat[s - 1, j - 1, r - 1],
                ))
    for i in range(1, ts.p + 1):
        for j2 in range(i, ts.p + 1):
            records.append({
                "record": "sigma", "i": i, "j": j2,
                "value": float(sigma[i - 1, j2 - 1]),
            })
    report.write_records(records, out)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command()
@click.argument("series", type=click.Path(exists=True, dir_okay=False))
@_estimation_options
@click.option("--targets", default="all", show_default=True,
              help='"all" or semicolon-separated j,r,s triples.')
@click.option("--B", "b_draws", type=int, default=500, show_default=True,
              help="Bootstrap replicates.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--burn-in", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Report path (JSON lines).")
@click.option("--no-figures", is_flag=True, help="Skip PNG rendering.")
@_guard
def ci(series, d, lam, lambda_z, lambda_eps, a_n, max_iter, tol, center,
       standardize, targets, b_draws, alpha, burn_in, seed, workers, out,
       no_figures):
    """Bootstrap confidence intervals for de-biased coefficients."""
    workers = _workers(workers)
    if lambda_eps is None:
        raise click.UsageError(
            "--lambda-eps is required (the bootstrap model thresholds the "
            "residual covariance)"
        )
    ts = io.read_series(series)
    cfg = pipeline_mod.PipelineConfig(
        d=d, lam=lam, lam_z=lambda_z, lambda_eps=lambda_eps, a_n=a_n,
        max_iter=max_iter, tol=tol, burn_in=burn_in, standardize=standardize,
    )
    target_list = _parse_targets(targets, ts.p, d)
    from . import bootstrap as bootstrap_mod

    fitres = pipeline_mod.estimate(ts, cfg, center=center)
    run = bootstrap_mod.run(
        fitres.design, fitres.fit, fitres.model_thr, target_list,
        b_draws=b_draws, alpha=alpha, seed=seed,
        config=cfg.lasso_config(), nodewise_config=cfg.nodewise_config(),
        burn_in=burn_in, workers=workers,
    )
    records = [report.meta_record(
        "ci", _config_dict(cfg, center=center, B=b_draws, alpha=alpha,
                           workers=workers),
        seed=seed, series=str(series), n=ts.n, p=ts.p,
        rejected_replicates=run.rejected,
    )]
    records.extend(report.ci_record(interval) for interval in run.intervals)
    report.write_records(records, out)
    click.echo(f"wrote {len(run.intervals)} intervals to {out}")
    if not no_figures:
        fig_path = str(Path(out).with_suffix("")) + "_intervals.png"
        figures.ci_forest(run.intervals, fig_path,
                          title=f"{run.intervals[0].level:.0%} bootstrap CIs")
        click.echo(f"wrote {fig_path}")


@main.command()
@click.argument("series", type=click.Path(exists=True, dir_okay=False))
@_estimation_options
@click.option("--group", "group_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Group file with [GA] / [GSIGMA] sections.")
@click.option("--B", "b_draws", type=int, default=500, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--restricted-observed", is_flag=True,
              help="Studentise the restricted fit for the observed statistic.")
@click.option("--lambda-grid", default=None,
              help="Comma-separated penalties; runs the test once per value.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--no-figures", is_flag=True)
@_guard
def test(series, d, lam, lambda_z, lambda_eps, a_n, max_iter, tol, center,
         standardize, group_path, b_draws, alpha, seed, workers,
         restricted_observed, lambda_grid, out, no_figures):
    """Bootstrap max-test that every entry of a group is zero."""
    workers = _workers(workers)
    if lambda_eps is None:
        raise click.UsageError("--lambda-eps is required for the test pipeline")
    ts = io.read_series(series)
    group = io.read_group(group_path)
    try:
        group.validate(ts.p, d)
    except IndexError as exc:
        raise click.UsageError(str(exc)) from exc
    if center:
        from .varmodel import TimeSeries
        ts = TimeSeries(ts.values - ts.values.mean(axis=0))

    from . import design as design_mod

    des = design_mod.build(ts, d)
    grid = [lam]
    if lambda_grid is not None:
        try:
            grid = [float(v) for v in lambda_grid.split(",") if v.strip()]
        except ValueError:
            raise click.UsageError(
                f"--lambda-grid must be comma-separated numbers, got {lambda_grid!r}"
            ) from None
        if not grid:
            raise click.UsageError("--lambda-grid is empty")

    base_cfg = pipeline_mod.PipelineConfig(
        d=d, lam=lam, lam_z=lambda_z, lambda_eps=lambda_eps, a_n=a_n,
        max_iter=max_iter, tol=tol, standardize=standardize,
    )
    records = [report.meta_record(
        "test", _config_dict(base_cfg, B=b_draws, alpha=alpha, workers=workers,
                             restricted_observed=restricted_observed,
                             center=center, lambda_grid=grid),
        seed=seed, series=str(series), group=str(group_path), n=ts.n, p=ts.p,
    )]
    results = []
    for g_lam in grid:
        cfg = base_cfg.with_lam(g_lam)
        result = testing_mod.bootstrap_test(
            des, cfg, group, b_draws=b_draws, alpha=alpha, seed=seed,
            restricted_observed=restricted_observed, workers=workers,
        )
        results.append((g_lam, result))
        records.append(report.test_record(
            result, lam=g_lam if lambda_grid is not None else None,
        ))
    report.write_records(records, out)
    for g_lam, result in results:
        verdict = "reject" if result.reject else "fail to reject"
        prefix = f"lambda={g_lam:g}: " if lambda_grid is not None else ""
        click.echo(f"{prefix}T={result.statistic:.4f} crit={result.critical_value:.4f} "
                   f"p={result.p_value:.4g} -> {verdict}")
    if not no_figures:
        stem = str(Path(out).with_suffix(""))
        if lambda_grid is not None:
            fig_path = stem + "_sweep.png"
            figures.lambda_sweep([(g, res.p_value) for g, res in results],
                                 alpha, fig_path)
        else:
            fig_path = stem + "_null.png"
            figures.null_histogram(results[0][1], fig_path)
        click.echo(f"wrote {fig_path}")


_EXAMPLE1_SCENARIOS = [
    ("H0", 0.0, 0.0),
    ("H1A", 0.3, 0.0),
    ("H1A", 0.7, 0.0),
    ("H1C", 0.0, 0.25),
    ("H1C", 0.0, 0.5),
    ("H1AC", 0.3, 0.25),
]
_EXAMPLE2_SCENARIOS = [
    ("H0", None, 0.0),
    ("H1A", "single", 0.3),
    ("H1A", "single", 0.5),
    ("H1A", "single", 0.7),
    ("H1A", "single", 0.9),
    ("H1B", "five", 0.3),
    ("H1B", "five", 0.5),
]


def _example_defaults(example: int) -> dict:
    if example == 1:
        return {"lam": 0.11, "lambda_eps": 0.11, "n_list": (50, 100)}
    return {"lam": 0.14, "lambda_eps": 0.255, "n_list": (128, 200)}


@main.command()
@click.option("--example", type=click.IntRange(1, 2), required=True)
@click.option("--table", type=click.Choice(["coverage", "test"]), required=True,
              help="coverage replicates the CI grid (example 1 only); test "
                   "replicates the rejection-frequency tables.")
@click.option("--mc", "n_mc", type=int, default=500, show_default=True,
              help="Monte-Carlo trials per cell.")
@click.option("--B", "b_draws", type=int, default=500, show_default=True)
@click.option("--n", "n_spec", default=None,
              help="Comma-separated sample sizes (default: the table's own).")
@click.option("--lambda", "lam", type=float, default=None,
              help="Override the example's published penalty.")
@click.option("--lambda-eps", type=float, default=None)
@click.option("--a-n", type=float, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True)
@click.option("--restricted-observed", is_flag=True)
@click.option("--no-figures", is_flag=True)
@_guard
def replicate(example, table, n_mc, b_draws, n_spec, lam, lambda_eps, a_n,
              seed, workers, out_dir, restricted_observed, no_figures):
    """Replicate the simulation-study tables at a configurable scale."""
    workers = _workers(workers)
    defaults = _example_defaults(example)
    lam = defaults["lam"] if lam is None else lam
    lambda_eps = defaults["lambda_eps"] if lambda_eps is None else lambda_eps
    if n_spec is None:
        n_list = list(defaults["n_list"]) if table == "test" else [100]
    else:
        try:
            n_list = [int(v) for v in n_spec.split(",") if v.strip()]
        except ValueError:
            raise click.UsageError(f"--n must be comma-separated integers, "
                                   f"got {n_spec!r}") from None
        if not n_list:
            raise click.UsageError("--n is empty")
    cfg = pipeline_mod.PipelineConfig(d=1, lam=lam, lambda_eps=lambda_eps,
                                      a_n=a_n)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "record": "meta", "schema": report.SCHEMA_VERSION,
        "command": "replicate", "example": example, "table": table,
        "n": n_list, "n_mc": n_mc, "B": b_draws,
        "lambda": lam, "lambda_eps": lambda_eps, "a_n": cfg.threshold,
        "seed": seed, "version": __version__, "cells": [],
    }

    if table == "coverage":
        if example != 1:
            raise click.UsageError("coverage replication is defined for --example 1")
        model = examples.example1_model()
        for n in n_list:
            study = replicate_mod.run_coverage_study(
                model, n=n, n_mc=n_mc, b_draws=b_draws, config=cfg,
                seed=seed, workers=workers,
            )
            for level in study.levels:
                for method in ("asymptotic", "bootstrap"):
                    name = f"coverage_{method}_{int(round(level * 100))}_n{n}"
                    header, rows = report.matrix_table(study.matrix(level, method))
                    report.write_table(header, rows, out / f"{name}.csv")
                    if not no_figures:
                        figures.coverage_heatmap(study.matrix(level, method),
                                                 level, method,
                                                 out / f"{name}.png")
            meta["cells"].append({
                "n": n, "kept": study.kept,
                "trial_rejections": study.trial_rejections,
                "replicate_rejections": study.replicate_rejections,
            })
            click.echo(f"n={n}: mean bootstrap coverage "
                       f"{study.matrix(0.95, 'bootstrap').mean():.3f} at 95%")
    else:
        alphas = (0.05, 0.10)
        if example == 1:
            scenarios = _EXAMPLE1_SCENARIOS
            group = examples.example1_group()
            header = ["scenario", "delta_a", "delta_c"]
            def build_model(scn):
                return examples.example1_test_model(scn[1], scn[2])
            def row_label(scn):
                return [scn[0], scn[1], scn[2]]
        else:
            scenarios = _EXAMPLE2_SCENARIOS
            group = examples.example2_group()
            header = ["scenario", "delta"]
            def build_model(scn):
                if scn[1] is None:
                    return examples.example2_model()
                return examples.example2_alternative(scn[1], scn[2])
            def row_label(scn):
                return [scn[0], scn[2]]
        header += [f"n{n}_alpha{a:g}" for n in n_list for a in alphas]
        rows = []
        rates_fig = []
        for scn in scenarios:
            model = build_model(scn)
            row = row_label(scn)
            for n in n_list:
                study = replicate_mod.run_test_study(
                    model, group, n=n, n_mc=n_mc, b_draws=b_draws,
                    config=cfg, seed=seed, alphas=alphas,
                    restricted_observed=restricted_observed, workers=workers,
                )
                row.extend(study.rejection_rates)
                meta["cells"].append({
                    "scenario": row_label(scn), "n": n, "kept": study.kept,
                    "trial_rejections": study.trial_rejections,
                    "replicate_rejections": study.replicate_rejections,
                })
                if n == n_list[-1]:
                    rates_fig.append(study.rejection_rates)
                click.echo(f"{scn[0]} n={n}: " + " ".join(
                    f"alpha={a:g} -> {r:.3f}"
                    for a, r in zip(alphas, study.rejection_rates)))
            rows.append(row)
        name = f"rejection_example{example}"
        report.write_table(header, rows, out / f"{name}.csv")
        if not no_figures:
            labels = ["_".join(str(v) for v in row_label(s)) for s in scenarios]
            figures.rejection_bars(labels, np.array(rates_fig), alphas,
                                   out / f"{name}.png",
                                   title=f"rejection frequency, n={n_list[-1]}")

    with open(out / "metadata.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    click.echo(f"wrote tables to {out}")


if __name__ == "__main__":
    main()
