"""Synthetic data generators for the simulation study.

A scenario draws covariates from a p-variate Gaussian with common
pairwise correlation rho (equicorrelated by default, AR(1) optional),
assigns treatment by a logistic model on the raw covariates, and builds
a continuous outcome as true_te * a + X @ outcome_coefficients plus
optional Gaussian noise.  Covariates are standardized before they enter
the returned Dataset, mirroring how the selection pipeline consumes
real data.

Seeding: every consumer of randomness (covariates, treatment draws,
outcome noise, fold assignment, match ordering) gets its own stream
derived from integer keys, so toggling one stage never perturbs another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import Dataset
from .solvers import expit, standardize

BUILTIN_LABELS = ("1A", "1B", "2A", "2B")

# stream ids for derive_seed; harness adds method-specific offsets
STREAM_COVARIATES = 11
STREAM_TREATMENT = 12
STREAM_NOISE = 13


def derive_seed(*parts: int) -> int:
    """Deterministically mix integer keys into a single 64-bit RNG seed."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    hi, lo = ss.generate_state(2)
    return (int(hi) << 32) | int(lo)


@dataclass(frozen=True)
class ScenarioSpec:
    """Data-generating parameters plus the implied variable roles."""

    n: int
    p: int
    rho: float
    sigma: float
    treatment_coefficients: np.ndarray
    outcome_coefficients: np.ndarray
    true_te: float
    label: str = "custom"
    outcome_noise_sd: float = 1.0
    correlation: str = "equicorrelated"

    def __post_init__(self):
        t = np.asarray(self.treatment_coefficients, dtype=np.float64)
        o = np.asarray(self.outcome_coefficients, dtype=np.float64)
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.outcome_noise_sd < 0:
            raise ValueError("outcome_noise_sd must be >= 0")
        if t.shape != (self.p,) or o.shape != (self.p,):
            raise ValueError("coefficient vectors must have length p")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(o))):
            raise ValueError("coefficient vectors must be finite")
        if self.correlation not in ("equicorrelated", "ar1"):
            raise ValueError(f"unknown correlation structure {self.correlation!r}")
        object.__setattr__(self, "treatment_coefficients", t)
        object.__setattr__(self, "outcome_coefficients", o)

    # Variable roles (0-based column indices).
    @property
    def confounders(self) -> frozenset:
        t, o = self.treatment_coefficients, self.outcome_coefficients
        return frozenset(np.flatnonzero((t != 0) & (o != 0)).tolist())

    @property
    def outcome_only(self) -> frozenset:
        t, o = self.treatment_coefficients, self.outcome_coefficients
        return frozenset(np.flatnonzero((t == 0) & (o != 0)).tolist())

    @property
    def treatment_only(self) -> frozenset:
        t, o = self.treatment_coefficients, self.outcome_coefficients
        return frozenset(np.flatnonzero((t != 0) & (o == 0)).tolist())

    @property
    def spurious(self) -> frozenset:
        t, o = self.treatment_coefficients, self.outcome_coefficients
        return frozenset(np.flatnonzero((t == 0) & (o == 0)).tolist())

    def to_config(self) -> dict:
        """JSON-compatible dict; coefficient indices are 1-based to match
        the variable names X1..Xp used in reports."""
        return {
            "label": self.label,
            "n": self.n,
            "p": self.p,
            "rho": self.rho,
            "sigma": self.sigma,
            "true_te": self.true_te,
            "outcome_noise_sd": self.outcome_noise_sd,
            "correlation": self.correlation,
            "treatment_coefficients": _sparse_pairs(self.treatment_coefficients),
            "outcome_coefficients": _sparse_pairs(self.outcome_coefficients),
        }

    @classmethod
    def from_config(cls, config: dict) -> "ScenarioSpec":
        p = int(config["p"])
        return cls(
            n=int(config["n"]),
            p=p,
            rho=float(config["rho"]),
            sigma=float(config["sigma"]),
            treatment_coefficients=_dense_vector(config["treatment_coefficients"], p),
            outcome_coefficients=_dense_vector(config["outcome_coefficients"], p),
            true_te=float(config["true_te"]),
            label=str(config.get("label", "custom")),
            outcome_noise_sd=float(config.get("outcome_noise_sd", 1.0)),
            correlation=str(config.get("correlation", "equicorrelated")),
        )


def _sparse_pairs(vec: np.ndarray) -> list:
    return [[int(j) + 1, float(vec[j])] for j in np.flatnonzero(vec)]


def _dense_vector(pairs, p: int) -> np.ndarray:
    out = np.zeros(p)
    for index, value in pairs:
        j = int(index) - 1
        if not (0 <= j < p):
            raise ValueError(f"coefficient index {index} outside 1..{p}")
        out[j] = float(value)
    return out


@dataclass(frozen=True)
class OracleBenchmark:
    """A benchmark variable set derived from the true scenario roles."""

    kind: str
    variable_set: frozenset


def oracle_benchmark(spec: ScenarioSpec, kind: str) -> OracleBenchmark:
    """Targ = confounders + outcome predictors; Conf = confounders only;
    PotConf = confounders + treatment predictors."""
    if kind == "Targ":
        var_set = spec.confounders | spec.outcome_only
    elif kind == "Conf":
        var_set = spec.confounders
    elif kind == "PotConf":
        var_set = spec.confounders | spec.treatment_only
    else:
        raise ValueError(f"unknown oracle benchmark {kind!r}")
    return OracleBenchmark(kind=kind, variable_set=frozenset(var_set))


def builtin_scenario(label: str, n: int = 1000) -> ScenarioSpec:
    """The four built-in scenarios.

    Scenario 1 (labels 1A/1B): p=100 standard-normal covariates;
    treatment logit = X1 + ... + X10 + X21 + ... + X30; outcome
    0.6 * (X1 + ... + X20); TE = 0.5.  Scenario 2 (labels 2A/2B): p=100
    covariates with variance 4; treatment logit = 0.5 X1 - X2 + 0.3 X5
    - 0.3 X6 + 0.3 X7 - 0.3 X8; outcome 2 X1 + 2 X2 + 5 X3 + 5 X4;
    TE = 1.0.  The A variants are uncorrelated, the B variants use
    rho = 0.5.  Outcomes carry unit Gaussian noise by default.
    """
    if label not in BUILTIN_LABELS:
        raise ValueError(f"unknown scenario label {label!r}; expected one of {BUILTIN_LABELS}")
    p = 100
    rho = 0.5 if label.endswith("B") else 0.0
    t = np.zeros(p)
    o = np.zeros(p)
    if label.startswith("1"):
        t[0:10] = 1.0
        t[20:30] = 1.0
        o[0:20] = 0.6
        sigma, te = 1.0, 0.5
    else:
        t[[0, 1, 4, 5, 6, 7]] = [0.5, -1.0, 0.3, -0.3, 0.3, -0.3]
        o[[0, 1, 2, 3]] = [2.0, 2.0, 5.0, 5.0]
        sigma, te = 2.0, 1.0
    return ScenarioSpec(
        n=n,
        p=p,
        rho=rho,
        sigma=sigma,
        treatment_coefficients=t,
        outcome_coefficients=o,
        true_te=te,
        label=label,
    )


def _draw_covariates(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    n, p = spec.n, spec.p
    z = rng.standard_normal((n, p))
    if spec.correlation == "equicorrelated":
        # X = sigma * (sqrt(1-rho) Z + sqrt(rho) z0 1^T) has covariance
        # sigma^2 [(1-rho) I + rho J] exactly.
        z0 = rng.standard_normal((n, 1))
        return spec.sigma * (np.sqrt(1.0 - spec.rho) * z + np.sqrt(spec.rho) * z0)
    idx = np.arange(p)
    corr = spec.rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(corr)
    return spec.sigma * (z @ chol.T)


def generate(spec: ScenarioSpec, seed: int) -> Dataset:
    """Draw one dataset from the scenario; byte-identical given (spec, seed).

    Treatment and outcome are built from the raw covariate draw; the
    returned design is the standardized version of that draw.
    """
    rng_x = np.random.default_rng(derive_seed(seed, STREAM_COVARIATES))
    rng_a = np.random.default_rng(derive_seed(seed, STREAM_TREATMENT))

    x_raw = _draw_covariates(spec, rng_x)
    propensity = expit(x_raw @ spec.treatment_coefficients)
    a = (rng_a.random(spec.n) < propensity).astype(np.float64)
    y = spec.true_te * a + x_raw @ spec.outcome_coefficients
    if spec.outcome_noise_sd > 0:
        rng_e = np.random.default_rng(derive_seed(seed, STREAM_NOISE))
        y = y + spec.outcome_noise_sd * rng_e.standard_normal(spec.n)
    X = standardize(x_raw)
    return Dataset(X=X, a=a, y=y)
