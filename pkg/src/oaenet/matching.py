"""Propensity-score matching and ATT estimation on a selected variable set.

The propensity model is a plain logistic MLE refit on the selected
columns; scores feed a greedy 1:1 nearest-neighbor matcher (without
replacement by default) and the ATT is the mean outcome difference over
matched pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .pipeline import Dataset
from .solvers import PROB_CLIP, expit, fit_logistic_mle
from .solvers import logit as _logit

SEPARATION_COEF_BOUND = 30.0
SEPARATION_RIDGE = 1e-4


class NoOverlapError(ValueError):
    """No matched pairs exist: treated and control groups do not overlap."""


@dataclass(frozen=True)
class PropensityScores:
    scores: np.ndarray
    model_coefficients: np.ndarray
    intercept: float
    selected: frozenset
    ridge_fallback: bool = False


@dataclass(frozen=True)
class MatchedSet:
    pairs: tuple
    unmatched_treated: tuple
    with_replacement: bool
    caliper: Optional[float]


@dataclass(frozen=True)
class AttEstimate:
    att: float
    n_pairs: int
    pair_differences: np.ndarray


def fit_propensity(data: Dataset, selected) -> PropensityScores:
    """Unpenalized logistic propensity model on the selected columns.

    An empty selection yields the intercept-only model (every score equals
    the treated fraction).  If the Newton fit diverges or blows past the
    coefficient bound — the signature of perfect separation — the model is
    refit with a tiny ridge (1e-4) and flagged instead of failing.
    """
    sel = sorted(int(j) for j in selected)
    if any(j < 0 or j >= data.p for j in sel):
        raise ValueError("selected indices outside the design's columns")
    if not sel:
        abar = float(data.a.mean())
        scores = np.full(data.n, abar)
        return PropensityScores(
            scores=np.clip(scores, PROB_CLIP, 1.0 - PROB_CLIP),
            model_coefficients=np.zeros(0),
            intercept=float(_logit(abar)),
            selected=frozenset(),
            ridge_fallback=False,
        )

    Xsel = data.X.select_columns(sel)
    mle = fit_logistic_mle(Xsel, data.a)
    ridge_fallback = False
    if not mle.converged or np.max(np.abs(mle.coefficients)) > SEPARATION_COEF_BOUND:
        mle = fit_logistic_mle(Xsel, data.a, ridge=SEPARATION_RIDGE)
        ridge_fallback = True
    eta = mle.intercept + Xsel.values @ mle.coefficients
    scores = np.clip(expit(eta), PROB_CLIP, 1.0 - PROB_CLIP)
    return PropensityScores(
        scores=scores,
        model_coefficients=mle.coefficients,
        intercept=mle.intercept,
        selected=frozenset(sel),
        ridge_fallback=ridge_fallback,
    )


def _scores_on_scale(scores, distance_scale: str) -> np.ndarray:
    s = scores.scores if isinstance(scores, PropensityScores) else np.asarray(
        scores, dtype=np.float64
    )
    if distance_scale == "logit":
        return _logit(np.clip(s, PROB_CLIP, 1.0 - PROB_CLIP))
    if distance_scale != "probability":
        raise ValueError(f"unknown distance scale {distance_scale!r}")
    return s


def match_nearest_neighbor(
    scores: Union[PropensityScores, np.ndarray],
    a,
    with_replacement: bool = False,
    caliper: Optional[float] = None,
    seed: int = 0,
    distance_scale: str = "probability",
) -> MatchedSet:
    """Greedy 1:1 nearest-neighbor matching on the propensity score.

    Treated units are visited in a seeded random order; each takes the
    eligible control with the smallest absolute score difference, ties
    going to the lowest control index.  A caliper (in score units,
    boundary inclusive) sends treated units with no eligible control
    within reach to `unmatched_treated`.  Distances are measured on the
    probability scale unless distance_scale="logit".
    """
    s = _scores_on_scale(scores, distance_scale)
    a = np.asarray(a, dtype=np.float64)
    if a.shape != s.shape:
        raise ValueError("scores and treatment vector must have equal length")
    treated = np.flatnonzero(a == 1.0)
    controls = np.flatnonzero(a == 0.0)
    if treated.size == 0 or controls.size == 0:
        raise ValueError("need at least one treated and one control unit")

    rng = np.random.default_rng(seed)
    order = rng.permutation(treated)
    control_scores = s[controls]
    available = np.ones(controls.size, dtype=bool)

    pairs = []
    unmatched = []
    for t in order:
        eligible = available if not with_replacement else np.ones(controls.size, bool)
        if not eligible.any():
            unmatched.append(int(t))
            continue
        dist = np.abs(control_scores - s[t])
        dmin = dist[eligible].min()
        if caliper is not None and dmin > caliper:
            unmatched.append(int(t))
            continue
        candidates = np.flatnonzero(eligible & (dist == dmin))
        pos = int(candidates[0])  # controls are in ascending index order
        pairs.append((int(t), int(controls[pos])))
        if not with_replacement:
            available[pos] = False
    return MatchedSet(
        pairs=tuple(pairs),
        unmatched_treated=tuple(unmatched),
        with_replacement=with_replacement,
        caliper=caliper,
    )


def auto_caliper(scores: Union[PropensityScores, np.ndarray], distance_scale: str = "probability") -> float:
    """Caliper width 0.2 * sd of the scores on the chosen distance scale.

    On the logit scale this is the classic propensity-caliper rule; it
    adapts to however spread out the fitted scores are, and degrades to 0
    (exact-match-only, boundary inclusive) for constant scores.
    """
    s = _scores_on_scale(scores, distance_scale)
    return 0.2 * float(np.std(s, ddof=1)) if s.size > 1 else 0.0


def estimate_att(matched: MatchedSet, y) -> AttEstimate:
    """Average treatment effect on the treated over matched pairs."""
    if not matched.pairs:
        raise NoOverlapError(
            "no matched pairs: treated units have no overlapping controls"
        )
    y = np.asarray(y, dtype=np.float64)
    diffs = np.array([y[t] - y[c] for t, c in matched.pairs])
    return AttEstimate(
        att=float(diffs.mean()),
        n_pairs=len(matched.pairs),
        pair_differences=diffs,
    )
