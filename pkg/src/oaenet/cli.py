"""Command-line interface.

Subcommands:
  simulate  run a Monte Carlo scenario study and write report CSVs
  select    run the variable-selection pipeline on a CSV, emit JSON
  match     estimate the ATT on a CSV given a set of covariate columns

Errors exit nonzero with a single `error: ...` line on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .harness import (
    METHOD_IDS,
    ExperimentConfig,
    MatchingOptions,
    ingest_dataset,
    run_experiment,
    write_report,
)
from .matching import auto_caliper, estimate_att, fit_propensity, match_nearest_neighbor
from .pipeline import GridConfig, outcome_adaptive_lasso, select_variables
from .simulation import BUILTIN_LABELS, ScenarioSpec, builtin_scenario

OUT_DIR_ENVVAR = "OAENET_OUT_DIR"


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _resolve_scenario(value: str, n: int) -> ScenarioSpec:
    if value in BUILTIN_LABELS:
        return builtin_scenario(value, n=n)
    path = Path(value)
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            return ScenarioSpec.from_config(json.load(fh))
    raise ValueError(
        f"scenario {value!r} is neither a builtin label {BUILTIN_LABELS} nor a config file"
    )


def _parse_floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_caliper(text: str):
    if text == "auto":
        return "auto"
    if text == "none":
        return None
    return float(text)


@click.group()
def main():
    """Outcome-adaptive elastic-net variable selection and matching."""


@main.command()
@click.option("--scenario", required=True, help="Builtin label (1A/1B/2A/2B) or scenario config JSON path.")
@click.option("--replications", default=1000, show_default=True, type=int)
@click.option("--n", default=1000, show_default=True, type=int, help="Sample size for builtin scenarios.")
@click.option("--gamma", default=3.0, show_default=True, type=float)
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--methods", default="OAENet,OLas,Targ,Conf,PotConf", show_default=True,
              help="Comma-separated subset of " + ",".join(METHOD_IDS))
@click.option("--out", envvar=OUT_DIR_ENVVAR, required=True,
              help=f"Output directory (or set ${OUT_DIR_ENVVAR}).")
@click.option("--threads", default=1, show_default=True, type=int,
              help="Replication-level worker count.")
@click.option("--lambda2-grid", default=None, help="Comma-separated lambda2 values.")
@click.option("--lambda1-count", default=50, show_default=True, type=int)
@click.option("--lambda1-min-ratio", default=1e-3, show_default=True, type=float)
@click.option("--with-replacement", is_flag=True, default=False)
@click.option("--caliper", default="auto", show_default=True,
              help="'auto' (0.2 sd of scores), 'none', or a width in score units.")
@click.option("--distance-scale", default="logit", show_default=True,
              type=click.Choice(["probability", "logit"]))
def simulate(scenario, replications, n, gamma, folds, seed, methods, out, threads,
             lambda2_grid, lambda1_count, lambda1_min_ratio,
             with_replacement, caliper, distance_scale):
    """Run a Monte Carlo study and write replication/summary/proportion CSVs."""
    try:
        spec = _resolve_scenario(scenario, n)
        grid = GridConfig(
            lambda2_values=_parse_floats(lambda2_grid) if lambda2_grid else GridConfig().lambda2_values,
            lambda1_count=lambda1_count,
            lambda1_min_ratio=lambda1_min_ratio,
        )
        config = ExperimentConfig(
            scenario=spec,
            replications=replications,
            methods=tuple(m.strip() for m in methods.split(",") if m.strip()),
            gamma=gamma,
            k_folds=folds,
            grid=grid,
            matching=MatchingOptions(
                with_replacement=with_replacement,
                caliper=_parse_caliper(caliper),
                distance_scale=distance_scale,
            ),
            root_seed=seed,
            output_dir=out,
            workers=threads,
        )
        report = run_experiment(config)
        paths = write_report(report, out)
    except Exception as exc:
        _fail(str(exc))
    for summary in report.summaries:
        click.echo(
            f"{summary.method}: mean_att={summary.mean_att:.4f} bias={summary.bias:+.4f} "
            f"variance={summary.variance:.5f} failures={summary.failures}"
        )
    click.echo(f"report written to {paths['summary.csv'].parent}")


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--treatment-col", required=True)
@click.option("--outcome-col", required=True)
@click.option("--gamma", default=3.0, show_default=True, type=float)
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--method", default="OAENet", show_default=True,
              type=click.Choice(["OAENet", "OLas"]))
@click.option("--lambda2-grid", default=None, help="Comma-separated lambda2 values.")
@click.option("--lambda1-count", default=50, show_default=True, type=int)
@click.option("--lambda1-min-ratio", default=1e-3, show_default=True, type=float)
@click.option("--out", default=None, help="JSON output path (default: stdout).")
def select(data_path, treatment_col, outcome_col, gamma, folds, seed, method,
           lambda2_grid, lambda1_count, lambda1_min_ratio, out):
    """Select variables on a real dataset; emit the result as JSON."""
    try:
        data = ingest_dataset(data_path, treatment_col, outcome_col)
        grid = GridConfig(
            lambda2_values=_parse_floats(lambda2_grid) if lambda2_grid else GridConfig().lambda2_values,
            lambda1_count=lambda1_count,
            lambda1_min_ratio=lambda1_min_ratio,
        )
        if method == "OAENet":
            result = select_variables(data, gamma=gamma, k_folds=folds,
                                      grid_config=grid, seed=seed)
        else:
            result = outcome_adaptive_lasso(data, gamma=gamma, k_folds=folds,
                                            grid_config=grid, seed=seed)
        lam1, lam2 = result.cv.selected
        payload = {
            "method": result.method_tag,
            "gamma": result.gamma,
            "k_folds": folds,
            "seed": seed,
            "selected": list(result.selected_names),
            "penalties": {"lambda1": lam1, "lambda2": lam2},
            "intercept": result.enet.intercept,
            "coefficients": {
                result.column_names[j]: float(result.enet.coefficients[j])
                for j in sorted(result.selected)
            },
            "cv_loss": float(np.min(result.cv.mean_cv_loss)),
            "converged": result.enet.converged,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if out:
            Path(out).write_text(text + "\n", encoding="utf-8")
            click.echo(f"selection written to {out}")
        else:
            click.echo(text)
    except Exception as exc:
        _fail(str(exc))


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--treatment-col", required=True)
@click.option("--outcome-col", required=True)
@click.option("--columns", required=True,
              help="Comma-separated covariate column names for the propensity model.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--caliper", default="none", show_default=True,
              help="'auto' (0.2 sd of scores), 'none', or a width in score units.")
@click.option("--with-replacement", is_flag=True, default=False)
@click.option("--distance-scale", default="probability", show_default=True,
              type=click.Choice(["probability", "logit"]))
@click.option("--out", default=None, help="JSON output path (default: stdout).")
def match(data_path, treatment_col, outcome_col, columns, seed, caliper,
          with_replacement, distance_scale, out):
    """Match on a propensity model over the given columns and report the ATT."""
    try:
        data = ingest_dataset(data_path, treatment_col, outcome_col)
        names = [c.strip() for c in columns.split(",") if c.strip()]
        missing = [c for c in names if c not in data.X.column_names]
        if missing:
            raise ValueError(f"columns not in dataset: {missing}")
        selected = [data.X.column_names.index(c) for c in names]
        scores = fit_propensity(data, selected)
        caliper_value = _parse_caliper(caliper)
        if caliper_value == "auto":
            caliper_value = auto_caliper(scores, distance_scale)
        matched = match_nearest_neighbor(
            scores, data.a, with_replacement=with_replacement,
            caliper=caliper_value, seed=seed, distance_scale=distance_scale,
        )
        estimate = estimate_att(matched, data.y)
        payload = {
            "att": estimate.att,
            "n_pairs": estimate.n_pairs,
            "n_unmatched_treated": len(matched.unmatched_treated),
            "ridge_fallback": scores.ridge_fallback,
            "columns": names,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if out:
            Path(out).write_text(text + "\n", encoding="utf-8")
            click.echo(f"estimate written to {out}")
        else:
            click.echo(text)
    except Exception as exc:
        _fail(str(exc))


if __name__ == "__main__":
    main()
