"""Monte Carlo experiment runner with CSV/JSON reporting.

Each replication draws a fresh dataset, runs every configured method to
obtain a variable set (the selection pipeline for OAENet/OLas, the true
roles for the oracle benchmarks Targ/Conf/PotConf), refits a plain
propensity model on that set, matches, and records the ATT.  A
replication whose matching produces no pairs is recorded as a failure
for that method: it stays out of the ATT moments but is counted, so a
method that cannot match is visible rather than silently flattering.

Randomness is keyed by (root_seed, replication, stage, method), so
adding or removing a method never changes any other method's rows.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import nan
from pathlib import Path
from typing import Optional

import numpy as np

from .matching import (
    NoOverlapError,
    auto_caliper,
    estimate_att,
    fit_propensity,
    match_nearest_neighbor,
)
from .pipeline import Dataset, GridConfig, outcome_adaptive_lasso, select_variables
from .simulation import ScenarioSpec, derive_seed, generate, oracle_benchmark
from .solvers import standardize

METHOD_IDS = {"OAENet": 1, "OLas": 2, "Targ": 3, "Conf": 4, "PotConf": 5}
ORACLE_METHODS = ("Targ", "Conf", "PotConf")

STREAM_DATA = 0
STREAM_SELECTION = 1
STREAM_MATCHING = 2

REPORT_FILES = ("replications.csv", "summary.csv", "selection_proportions.csv", "config.json")


@dataclass(frozen=True)
class MatchingOptions:
    """Matching knobs for the harness.

    The default caliper "auto" resolves, per replication and method, to
    0.2 * sd of the fitted scores on the chosen distance scale; matching
    the tails of a strong propensity model without a caliper lets badly
    mismatched pairs dominate the ATT.  Set caliper=None for none, or a
    float for an absolute width in score units.
    """

    with_replacement: bool = False
    caliper: object = "auto"
    distance_scale: str = "logit"

    def __post_init__(self):
        c = self.caliper
        if not (c is None or c == "auto" or isinstance(c, (int, float))):
            raise ValueError("caliper must be None, 'auto', or a number")
        if isinstance(c, (int, float)) and not (np.isfinite(c) and c >= 0):
            raise ValueError(f"numeric caliper must be finite and >= 0, got {c}")
        if self.distance_scale not in ("probability", "logit"):
            raise ValueError(f"unknown distance scale {self.distance_scale!r}")

    def resolve_caliper(self, scores) -> Optional[float]:
        if self.caliper == "auto":
            return auto_caliper(scores, self.distance_scale)
        return self.caliper if self.caliper is None else float(self.caliper)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    replications: int
    methods: tuple
    gamma: float = 3.0
    k_folds: int = 5
    grid: GridConfig = field(default_factory=GridConfig)
    matching: MatchingOptions = field(default_factory=MatchingOptions)
    root_seed: int = 0
    output_dir: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be non-empty")
        unknown = [m for m in methods if m not in METHOD_IDS]
        if unknown:
            raise ValueError(
                f"unknown methods {unknown}; expected a subset of {sorted(METHOD_IDS)}"
            )
        if len(set(methods)) != len(methods):
            raise ValueError("methods must not repeat")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "methods", methods)

    def to_config_dict(self) -> dict:
        """Resolved experiment identity (execution knobs excluded)."""
        return {
            "scenario": self.scenario.to_config(),
            "replications": self.replications,
            "methods": list(self.methods),
            "gamma": self.gamma,
            "k_folds": self.k_folds,
            "grid": {
                "lambda2_values": list(self.grid.lambda2_values),
                "lambda1_count": self.grid.lambda1_count,
                "lambda1_min_ratio": self.grid.lambda1_min_ratio,
                "lambda1_values": (
                    None
                    if self.grid.lambda1_values is None
                    else list(self.grid.lambda1_values)
                ),
            },
            "matching": {
                "with_replacement": self.matching.with_replacement,
                "caliper": self.matching.caliper,
                "distance_scale": self.matching.distance_scale,
            },
            "root_seed": self.root_seed,
        }


@dataclass(frozen=True)
class ReplicationRecord:
    replication: int
    method: str
    att: Optional[float]  # None when matching produced no pairs
    n_pairs: int
    selected: tuple

    @property
    def failed(self) -> bool:
        return self.att is None


@dataclass(frozen=True)
class MethodSummary:
    method: str
    successes: int
    failures: int
    mean_att: float
    bias: float
    variance: float


@dataclass(frozen=True)
class MonteCarloReport:
    config: ExperimentConfig
    records: tuple
    summaries: tuple
    selection_proportions: dict


def _select_for_method(data: Dataset, method: str, config: ExperimentConfig, rep: int):
    mid = METHOD_IDS[method]
    if method in ORACLE_METHODS:
        return oracle_benchmark(config.scenario, method).variable_set
    seed = derive_seed(config.root_seed, rep, STREAM_SELECTION, mid)
    if method == "OAENet":
        result = select_variables(
            data, gamma=config.gamma, k_folds=config.k_folds,
            grid_config=config.grid, seed=seed,
        )
    else:
        result = outcome_adaptive_lasso(
            data, gamma=config.gamma, k_folds=config.k_folds,
            grid_config=config.grid, seed=seed,
        )
    return result.selected


def _run_replication(config: ExperimentConfig, rep: int) -> list:
    data = generate(config.scenario, derive_seed(config.root_seed, rep, STREAM_DATA))
    records = []
    for method in config.methods:
        selected = _select_for_method(data, method, config, rep)
        scores = fit_propensity(data, selected)
        matched = match_nearest_neighbor(
            scores,
            data.a,
            with_replacement=config.matching.with_replacement,
            caliper=config.matching.resolve_caliper(scores),
            seed=derive_seed(config.root_seed, rep, STREAM_MATCHING, METHOD_IDS[method]),
            distance_scale=config.matching.distance_scale,
        )
        try:
            estimate = estimate_att(matched, data.y)
            att: Optional[float] = estimate.att
            n_pairs = estimate.n_pairs
        except NoOverlapError:
            att = None
            n_pairs = 0
        records.append(
            ReplicationRecord(
                replication=rep,
                method=method,
                att=att,
                n_pairs=n_pairs,
                selected=tuple(sorted(int(j) for j in selected)),
            )
        )
    return records


def _replication_worker(args) -> list:
    return _run_replication(*args)


def run_experiment(config: ExperimentConfig) -> MonteCarloReport:
    """Run all replications (optionally in parallel) and aggregate.

    Results are independent of the worker count: every replication is
    seeded from (root_seed, replication) alone and aggregation follows
    replication order.
    """
    reps = range(config.replications)
    if config.workers > 1:
        chunk = max(1, config.replications // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_rep = list(
                pool.map(_replication_worker, [(config, r) for r in reps], chunksize=chunk)
            )
    else:
        per_rep = [_run_replication(config, r) for r in reps]
    records = tuple(rec for rep_records in per_rep for rec in rep_records)

    p = config.scenario.p
    true_te = config.scenario.true_te
    summaries = []
    proportions = {}
    for method in config.methods:
        rows = [r for r in records if r.method == method]
        atts = np.array([r.att for r in rows if not r.failed])
        successes = atts.size
        failures = len(rows) - successes
        mean_att = float(atts.mean()) if successes else nan
        variance = float(atts.var(ddof=1)) if successes >= 2 else nan
        summaries.append(
            MethodSummary(
                method=method,
                successes=successes,
                failures=failures,
                mean_att=mean_att,
                bias=mean_att - true_te if successes else nan,
                variance=variance,
            )
        )
        counts = np.zeros(p)
        for r in rows:
            if not r.failed:
                counts[list(r.selected)] += 1.0
        proportions[method] = counts / successes if successes else np.full(p, nan)

    return MonteCarloReport(
        config=config,
        records=records,
        summaries=tuple(summaries),
        selection_proportions=proportions,
    )


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _open_for_write(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


def write_report(report: MonteCarloReport, output_dir) -> dict:
    """Write replications.csv, summary.csv, selection_proportions.csv and
    config.json; returns the path of each.  Row order and float formatting
    are deterministic, so identical runs produce byte-identical files."""
    if not report.config.methods:
        raise ValueError("refusing to write a report with no methods")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    p = report.config.scenario.p
    paths = {name: out / name for name in REPORT_FILES}

    with _open_for_write(paths["replications.csv"]) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replication", "method", "att", "n_pairs", "selected_mask"])
        for rec in sorted(report.records, key=lambda r: (r.replication, r.method)):
            mask = np.zeros(p, dtype=np.int8)
            mask[list(rec.selected)] = 1
            writer.writerow(
                [rec.replication, rec.method, _fmt(rec.att), rec.n_pairs,
                 "".join("1" if b else "0" for b in mask)]
            )

    with _open_for_write(paths["summary.csv"]) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "successes", "failures", "mean_att", "bias", "variance"])
        for s in sorted(report.summaries, key=lambda s: s.method):
            writer.writerow(
                [s.method, s.successes, s.failures, _fmt(s.mean_att), _fmt(s.bias), _fmt(s.variance)]
            )

    with _open_for_write(paths["selection_proportions.csv"]) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        names = [f"X{j + 1}" for j in range(p)]
        writer.writerow(["method"] + names)
        for method in sorted(report.selection_proportions):
            props = report.selection_proportions[method]
            writer.writerow([method] + [_fmt(v) for v in props])

    with _open_for_write(paths["config.json"]) as fh:
        json.dump(report.config.to_config_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    return paths


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


def ingest_dataset(covariates_path, treatment_column: str, outcome_column: str) -> Dataset:
    """Load a CSV with a header row into a standardized Dataset.

    Every column other than the named treatment and outcome columns is a
    covariate.  Missing or non-numeric cells are rejected with the exact
    file line and column name; the treatment column must be strictly 0/1.
    """
    path = Path(covariates_path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError(f"{path}: empty file or missing header row")
        for required in (treatment_column, outcome_column):
            if required not in header:
                raise ValueError(f"{path}: column {required!r} not found in header")
        t_idx = header.index(treatment_column)
        o_idx = header.index(outcome_column)
        cov_idx = [j for j in range(len(header)) if j not in (t_idx, o_idx)]
        if not cov_idx:
            raise ValueError(f"{path}: no covariate columns besides treatment/outcome")

        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row at line {line_no} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for j, cell in enumerate(row):
                text = cell.strip()
                if text == "":
                    raise ValueError(
                        f"{path}: missing value at line {line_no}, column {header[j]!r}"
                    )
                try:
                    value = float(text)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {text!r} at line {line_no}, "
                        f"column {header[j]!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: non-finite value at line {line_no}, column {header[j]!r}"
                    )
                parsed.append(value)
            rows.append(parsed)

    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    table = np.asarray(rows, dtype=np.float64)
    a = table[:, t_idx]
    bad = np.flatnonzero((a != 0.0) & (a != 1.0))
    if bad.size:
        raise ValueError(
            f"{path}: non-binary treatment value {a[bad[0]]!r} at line {int(bad[0]) + 2}"
        )
    y = table[:, o_idx]
    X = standardize(table[:, cov_idx], [header[j] for j in cov_idx])
    return Dataset(X=X, a=a, y=y)


def write_dataset_csv(
    data: Dataset, path, treatment_column: str = "treatment", outcome_column: str = "outcome"
) -> Path:
    """Write a Dataset to CSV at full float precision.

    Covariates are written as stored (standardized); re-ingesting
    re-standardizes them, which is a no-op up to rounding.
    """
    path = Path(path)
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(data.X.column_names) + [treatment_column, outcome_column])
        for i in range(data.n):
            writer.writerow(
                [repr(float(v)) for v in data.X.values[i]]
                + [str(int(data.a[i])), repr(float(data.y[i]))]
            )
    return path
