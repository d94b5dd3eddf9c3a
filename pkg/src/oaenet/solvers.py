"""Core numerical routines: standardization, OLS, logistic MLE, and the
adaptively weighted elastic-net logistic regression with lambda path and
k-fold cross-validation.

All fitting happens on a standardized design (columns centered to mean 0
and scaled to sample standard deviation 1).  The penalized treatment
model minimizes

    sum_i [log(1 + exp(eta_i)) - a_i * eta_i]
        + lambda2 * ||alpha||_2^2 + lambda1 * sum_j w_j |alpha_j|

over an unpenalized intercept and coefficients alpha, then reports
coefficients rescaled by (1 + lambda2 / n).  All penalties live on the
summed-loss scale (no 1/n in front of the log-likelihood).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._descent import enet_logistic_cd

DEFAULT_TOL = 1e-7
MAX_SWEEPS = 10_000
WEIGHT_CAP = 1e8
PROB_CLIP = 1e-12
SELECTION_THRESHOLD = 1e-8


def expit(x):
    """Numerically stable logistic function exp(x) / (1 + exp(x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


class DegeneratePathWarning(UserWarning):
    """Raised when the lambda path collapses to a single zero value."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignMatrix:
    """Standardized n x p design with the centering/scaling used to build it."""

    values: np.ndarray
    column_names: tuple
    standardized: bool
    column_means: np.ndarray
    column_scales: np.ndarray
    constant_columns: tuple = ()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def select_columns(self, indices: Sequence[int]) -> "DesignMatrix":
        idx = list(indices)
        const = tuple(i for i, j in enumerate(idx) if j in self.constant_columns)
        return DesignMatrix(
            values=np.asfortranarray(self.values[:, idx]),
            column_names=tuple(self.column_names[j] for j in idx),
            standardized=self.standardized,
            column_means=self.column_means[idx],
            column_scales=self.column_scales[idx],
            constant_columns=const,
        )


@dataclass(frozen=True)
class OlsFit:
    intercept: float
    coefficients: np.ndarray
    residual_sum_squares: float
    regularized: bool = False


@dataclass(frozen=True)
class AdaptiveWeights:
    """Per-coefficient L1 penalty multipliers w_j = min(|b_j|^-gamma, cap)."""

    gamma: float
    weights: np.ndarray
    cap: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w <= 0) or np.any(w > self.cap):
            raise ValueError("weights must lie in (0, cap]")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class PenaltySpec:
    lambda1: float
    lambda2: float
    weights: AdaptiveWeights

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class EnetFit:
    """Penalized treatment-model fit.

    `coefficients` carry the (1 + lambda2/n) rescaling; `raw_coefficients`
    are the actual minimizer and are what probability predictions use.
    The intercept is unpenalized and never rescaled.
    """

    intercept: float
    coefficients: np.ndarray
    raw_coefficients: np.ndarray
    rescale_factor: float
    objective_value: float
    converged: bool
    sweeps: int
    objective_trace: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CvResult:
    grid: tuple
    mean_cv_loss: np.ndarray
    se_cv_loss: np.ndarray
    selected: tuple
    fold_count: int


@dataclass(frozen=True)
class LogisticMle:
    """Unpenalized (or ridge-stabilized) logistic maximum-likelihood fit."""

    intercept: float
    coefficients: np.ndarray
    converged: bool
    iterations: int
    ridge: float = 0.0


# ---------------------------------------------------------------------------
# Standardization and OLS
# ---------------------------------------------------------------------------


def standardize(values, column_names=None) -> DesignMatrix:
    """Center columns to mean 0 and scale to sample sd 1 (ddof=1).

    Constant columns are centered, given scale 1, and flagged.  The
    original means and scales are retained for back-transformation.
    """
    raw = np.asarray(values, dtype=np.float64)
    if raw.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    n, p = raw.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to standardize, got {n}")
    if p < 1:
        raise ValueError("need at least one column")
    finite = np.isfinite(raw)
    if not finite.all():
        bad = int(np.flatnonzero(~finite.all(axis=0))[0])
        raise ValueError(f"non-finite values in column {bad}")
    if column_names is None:
        column_names = tuple(f"X{j + 1}" for j in range(p))
    else:
        column_names = tuple(str(c) for c in column_names)
        if len(column_names) != p:
            raise ValueError("column_names length does not match column count")

    means = raw.mean(axis=0)
    centered = raw - means
    # Second centering pass removes the residual rounding error so the
    # mean-zero invariant holds even for badly scaled input.
    extra = centered.mean(axis=0)
    centered -= extra
    means = means + extra
    sd = centered.std(axis=0, ddof=1)
    const = sd == 0.0
    scales = np.where(const, 1.0, sd)
    out = centered / scales
    return DesignMatrix(
        values=np.asfortranarray(out),
        column_names=column_names,
        standardized=True,
        column_means=means,
        column_scales=scales,
        constant_columns=tuple(int(j) for j in np.flatnonzero(const)),
    )


def fit_ols(X: DesignMatrix, y) -> OlsFit:
    """Least squares of y on the standardized design with a free intercept.

    Rank-deficient or n <= p problems are solved with a 1e-8 ridge jitter
    and flagged `regularized` instead of failing.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != X.n:
        raise ValueError("y must be a vector of length n")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    Xv = X.values
    n, p = Xv.shape
    ybar = float(y.mean())
    yc = y - ybar

    regularized = False
    if n > p:
        beta, _, rank, _ = np.linalg.lstsq(Xv, yc, rcond=None)
        if rank < p:
            regularized = True
    else:
        regularized = True
    if regularized:
        gram = Xv.T @ Xv
        gram[np.diag_indices_from(gram)] += 1e-8
        beta = np.linalg.solve(gram, Xv.T @ yc)

    resid = yc - Xv @ beta
    return OlsFit(
        intercept=ybar,
        coefficients=beta,
        residual_sum_squares=float(resid @ resid),
        regularized=regularized,
    )


def compute_weights(ols: OlsFit, gamma: float, cap: float = WEIGHT_CAP) -> AdaptiveWeights:
    """Adaptive penalty weights w_j = min(|b_j|^-gamma, cap).

    Zero coefficients map to the cap, so variables with no outcome signal
    are effectively excluded from the treatment model.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not cap > 0:
        raise ValueError(f"cap must be positive, got {cap}")
    absb = np.abs(ols.coefficients)
    with np.errstate(divide="ignore"):
        w = absb ** (-float(gamma))
    w = np.minimum(w, cap)
    return AdaptiveWeights(gamma=float(gamma), weights=w, cap=float(cap))


def unit_weights(p: int, cap: float = WEIGHT_CAP) -> AdaptiveWeights:
    """All-ones weights: plain (non-adaptive) elastic-net penalty."""
    return AdaptiveWeights(gamma=1.0, weights=np.ones(p), cap=cap)


# ---------------------------------------------------------------------------
# Penalized logistic solver
# ---------------------------------------------------------------------------


def _as_binary(a, n) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] != n:
        raise ValueError("treatment vector must have length n")
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError("treatment vector must be binary 0/1")
    if a.min() == a.max():
        raise ValueError("treatment vector must contain both classes")
    return a


def penalized_objective(X, a, intercept, coef, weights: AdaptiveWeights, lambda1, lambda2):
    """Exact penalized logistic objective (summed loss scale)."""
    Xv = X.values if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    eta = intercept + Xv @ coef
    loss = float(np.sum(np.logaddexp(0.0, eta) - a * eta))
    pen = lambda2 * float(coef @ coef) + lambda1 * float(weights.weights @ np.abs(coef))
    return loss + pen


def fit_enet_logistic(
    X: DesignMatrix,
    a,
    penalty: PenaltySpec,
    init: Optional[np.ndarray] = None,
    init_intercept: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = MAX_SWEEPS,
    record_objective: bool = False,
) -> EnetFit:
    """Weighted elastic-net logistic regression by majorized coordinate descent.

    Each sweep majorizes the logistic loss with the uniform curvature
    bound 1/4 and cycles soft-threshold updates, so the exact penalized
    objective never increases across sweeps.  Convergence is declared
    when no coefficient (nor the intercept) moves by more than `tol`
    within a full sweep.  Perfectly separable data with zero penalties
    simply exhausts `max_sweeps` and is reported as non-converged.
    """
    if not X.standardized:
        raise ValueError("fit_enet_logistic requires a standardized design")
    Xv = np.asfortranarray(X.values)
    n, p = Xv.shape
    av = _as_binary(a, n)
    w = penalty.weights.weights
    if w.shape[0] != p:
        raise ValueError("penalty weights length does not match column count")

    coef = np.zeros(p) if init is None else np.array(init, dtype=np.float64)
    if coef.shape[0] != p:
        raise ValueError("init length does not match column count")
    intercept = 0.0 if init_intercept is None else float(init_intercept)

    trace_buf = np.empty(max_sweeps + 1) if record_objective else np.empty(0)
    intercept, sweeps, converged, n_trace = enet_logistic_cd(
        Xv,
        av,
        w,
        float(penalty.lambda1),
        float(penalty.lambda2),
        coef,
        intercept,
        float(tol),
        int(max_sweeps),
        trace_buf,
    )
    rescale = 1.0 + penalty.lambda2 / n
    objective = penalized_objective(
        Xv, av, intercept, coef, penalty.weights, penalty.lambda1, penalty.lambda2
    )
    return EnetFit(
        intercept=float(intercept),
        coefficients=rescale * coef,
        raw_coefficients=coef,
        rescale_factor=rescale,
        objective_value=objective,
        converged=bool(converged),
        sweeps=int(sweeps),
        objective_trace=trace_buf[:n_trace].copy() if record_objective else None,
    )


def fit_logistic_mle(
    X: DesignMatrix,
    a,
    ridge: float = 0.0,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> LogisticMle:
    """Logistic MLE by Newton-Raphson with step halving.

    `ridge` adds ridge * ||alpha||^2 (intercept unpenalized) to the
    negative log-likelihood; a small positive value stabilizes separable
    problems.  Non-convergence is reported, not raised.
    """
    Xv = X.values
    n, p = Xv.shape
    av = _as_binary(a, n)
    Z = np.column_stack([np.ones(n), Xv])
    beta = np.zeros(p + 1)
    pen_mask = np.ones(p + 1)
    pen_mask[0] = 0.0

    def objective(b):
        eta = Z @ b
        return float(np.sum(np.logaddexp(0.0, eta) - av * eta)) + ridge * float(
            (b * pen_mask) @ b
        )

    converged = False
    it = 0
    cur = objective(beta)
    for it in range(1, max_iter + 1):
        eta = Z @ beta
        p_hat = np.clip(expit(eta), PROB_CLIP, 1.0 - PROB_CLIP)
        grad = Z.T @ (p_hat - av) + 2.0 * ridge * pen_mask * beta
        wdiag = p_hat * (1.0 - p_hat)
        hess = (Z * wdiag[:, None]).T @ Z
        hess[np.diag_indices_from(hess)] += 2.0 * ridge * pen_mask
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            hess[np.diag_indices_from(hess)] += 1e-10
            step = np.linalg.solve(hess, grad)
        t = 1.0
        new = None
        while t > 1e-10:
            cand = beta - t * step
            val = objective(cand)
            if val <= cur + 1e-12:
                new = cand
                cur = val
                break
            t *= 0.5
        if new is None:
            break
        delta = np.max(np.abs(new - beta))
        beta = new
        if delta < tol:
            converged = True
            break
    return LogisticMle(
        intercept=float(beta[0]),
        coefficients=beta[1:],
        converged=converged,
        iterations=it,
        ridge=float(ridge),
    )


# ---------------------------------------------------------------------------
# Lambda path and cross-validation
# ---------------------------------------------------------------------------


def lambda_path(
    X: DesignMatrix,
    a,
    weights: AdaptiveWeights,
    lambda2: float = 0.0,
    path_length: int = 50,
    ratio: float = 1e-3,
) -> np.ndarray:
    """Geometric sequence of lambda1 values from lambda_max down to ratio * lambda_max.

    lambda_max = max_j |sum_i x_ij (a_i - abar)| / w_j is the smallest L1
    penalty whose null-model fit satisfies the zero-coefficient
    stationarity condition, so fits at or above it keep every coefficient
    at zero.  The threshold does not depend on `lambda2` (the ridge
    gradient vanishes at zero); the argument is accepted so callers can
    build per-lambda2 paths uniformly.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    if path_length < 2:
        raise ValueError(f"path_length must be >= 2, got {path_length}")
    av = _as_binary(a, X.n)
    score = X.values.T @ (av - av.mean())
    lam_max = float(np.max(np.abs(score) / weights.weights))
    if lam_max == 0.0:
        warnings.warn(
            "all penalty thresholds are zero; returning a degenerate path [0.0]",
            DegeneratePathWarning,
        )
        return np.zeros(1)
    exponents = np.arange(path_length) / (path_length - 1)
    return lam_max * ratio**exponents


def mean_binomial_deviance(a, p_hat) -> float:
    """-2 * mean[a log p + (1-a) log(1-p)] with probabilities clipped."""
    a = np.asarray(a, dtype=np.float64)
    p = np.clip(np.asarray(p_hat, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-2.0 * np.mean(a * np.log(p) + (1.0 - a) * np.log1p(-p)))


def _stratified_folds(a: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Treatment-stratified fold labels; retries once if a training split
    would lose a class, then rejects."""
    n = a.shape[0]
    last_diag = ""
    for _ in range(2):
        folds = np.empty(n, dtype=np.int64)
        for cls in (1.0, 0.0):
            idx = np.flatnonzero(a == cls)
            perm = rng.permutation(idx)
            folds[perm] = np.arange(perm.size) % k
        t_counts = np.bincount(folds[a == 1.0], minlength=k)
        c_counts = np.bincount(folds[a == 0.0], minlength=k)
        t_total = int((a == 1.0).sum())
        c_total = n - t_total
        t_bad = np.flatnonzero(t_total - t_counts < 1)
        c_bad = np.flatnonzero(c_total - c_counts < 1)
        if t_bad.size == 0 and c_bad.size == 0:
            return folds
        last_diag = (
            f"training split would lose treated units for folds {t_bad.tolist()} "
            f"and controls for folds {c_bad.tolist()} "
            f"(class counts: {t_total} treated, {c_total} control, k={k})"
        )
    raise ValueError(f"stratified fold assignment failed after retry: {last_diag}")


def cross_validate(
    X: DesignMatrix,
    a,
    weights: AdaptiveWeights,
    grid: Sequence[tuple],
    k: int = 5,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> CvResult:
    """k-fold cross-validation of the penalized treatment model.

    Folds are stratified by treatment from `seed`; the per-fold loss is
    the held-out mean binomial deviance of the raw fitted model.  Within
    each (fold, lambda2) the lambda1 values are visited in decreasing
    order with warm starts.  The winning pair minimizes the across-fold
    mean loss; ties prefer larger lambda1, then larger lambda2.
    """
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    if X.n < 2 * k:
        raise ValueError(f"need n >= 2k for {k}-fold CV, got n={X.n}")
    grid = [(float(l1), float(l2)) for l1, l2 in grid]
    if not grid:
        raise ValueError("penalty grid is empty")
    av = _as_binary(a, X.n)
    w = weights.weights

    rng = np.random.default_rng(seed)
    folds = _stratified_folds(av, k, rng)

    groups: dict = {}
    group_order = []
    for pos, (l1, l2) in enumerate(grid):
        if l2 not in groups:
            groups[l2] = []
            group_order.append(l2)
        groups[l2].append((l1, pos))
    for l2 in group_order:
        groups[l2].sort(key=lambda item: -item[0])

    losses = np.empty((k, len(grid)))
    for f in range(k):
        train = folds != f
        Xtr = np.asfortranarray(X.values[train])
        atr = av[train]
        Xte = X.values[~train]
        ate = av[~train]
        for l2 in group_order:
            coef = np.zeros(X.p)
            intercept = 0.0
            for l1, pos in groups[l2]:
                intercept, _, _, _ = enet_logistic_cd(
                    Xtr, atr, w, l1, l2, coef, intercept,
                    float(tol), int(max_sweeps), np.empty(0),
                )
                p_hat = expit(intercept + Xte @ coef)
                losses[f, pos] = mean_binomial_deviance(ate, p_hat)

    mean_loss = losses.mean(axis=0)
    se_loss = losses.std(axis=0, ddof=1) / np.sqrt(k)
    best = 0
    for pos in range(1, len(grid)):
        if mean_loss[pos] < mean_loss[best]:
            best = pos
        elif mean_loss[pos] == mean_loss[best]:
            l1p, l2p = grid[pos]
            l1b, l2b = grid[best]
            if l1p > l1b or (l1p == l1b and l2p > l2b):
                best = pos
    return CvResult(
        grid=tuple(grid),
        mean_cv_loss=mean_loss,
        se_cv_loss=se_loss,
        selected=grid[best],
        fold_count=k,
    )
