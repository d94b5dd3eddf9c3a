"""Independent reference implementations used only to check the package.

Everything here deliberately avoids the package's solver code paths:
OLS goes through explicit normal equations, the logistic MLE through its
own Newton iteration, penalized fits through a staged dense grid search
(p = 2) or a bound-constrained L-BFGS-B lift (general p), and matching
through a step-by-step replay of the greedy rule.
"""

import itertools

import numpy as np
from scipy.optimize import minimize


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log1pexp(x):
    return np.logaddexp(0.0, x)


def normal_equations_ols(X, y):
    """OLS with intercept via explicit (Z'Z)^-1 Z'y."""
    n = X.shape[0]
    Z = np.column_stack([np.ones(n), X])
    beta = np.linalg.solve(Z.T @ Z, Z.T @ y)
    return beta[0], beta[1:]


def newton_logistic(X, a, ridge=0.0, tol=1e-12, max_iter=250):
    """Logistic MLE (optionally ridge on slopes) by damped Newton-Raphson.

    Returns (intercept, coefficients, converged).
    """
    X = np.asarray(X, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    n, p = X.shape
    Z = np.column_stack([np.ones(n), X])
    pen = np.ones(p + 1)
    pen[0] = 0.0
    beta = np.zeros(p + 1)

    def nll(b):
        eta = Z @ b
        return float(np.sum(log1pexp(eta) - a * eta) + ridge * (b * pen) @ b)

    value = nll(beta)
    converged = False
    for _ in range(max_iter):
        eta = Z @ beta
        mu = sigmoid(eta)
        grad = Z.T @ (mu - a) + 2.0 * ridge * pen * beta
        if np.max(np.abs(grad)) < tol * max(1.0, n):
            converged = True
            break
        w = mu * (1.0 - mu)
        hess = (Z * w[:, None]).T @ Z + 2.0 * ridge * np.diag(pen)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(hess + 1e-10 * np.eye(p + 1), grad)
        t = 1.0
        while t > 1e-12:
            cand = beta - t * step
            cand_value = nll(cand)
            if cand_value <= value:
                beta, value = cand, cand_value
                break
            t *= 0.5
        else:
            break
    return beta[0], beta[1:], converged


def enet_logistic_objective(X, a, intercept, coef, weights, lam1, lam2):
    eta = intercept + X @ coef
    loss = np.sum(log1pexp(eta) - a * eta)
    return float(loss + lam2 * coef @ coef + lam1 * weights @ np.abs(coef))


def _profile_intercept(X, a, coef):
    """Minimize the logistic loss over the intercept for fixed slopes."""
    base = X @ coef
    b = 0.0
    for _ in range(60):
        mu = sigmoid(b + base)
        g = np.sum(mu - a)
        h = np.sum(mu * (1.0 - mu))
        if h <= 0:
            break
        step = g / h
        b -= step
        if abs(step) < 1e-13:
            break
    return b


def grid_search_enet_2d(X, a, weights, lam1, lam2, box=3.0):
    """Staged dense grid search over two slopes with a profiled intercept.

    Scans [-box, box]^2 at spacing 0.1, then refines twice down to 1e-3
    around the incumbent; the objective is convex, so staged refinement
    lands on the same point a single dense 1e-3 grid would.
    Returns (intercept, coef) of the raw (unrescaled) minimizer.
    """
    assert X.shape[1] == 2

    def objective(c1, c2):
        coef = np.array([c1, c2])
        b = _profile_intercept(X, a, coef)
        return enet_logistic_objective(X, a, b, coef, weights, lam1, lam2), b

    center = np.zeros(2)
    spacing = None
    for spacing, half in ((0.1, box), (0.01, 0.25), (0.001, 0.025)):
        g1 = np.arange(center[0] - half, center[0] + half + spacing / 2, spacing)
        g2 = np.arange(center[1] - half, center[1] + half + spacing / 2, spacing)
        best = (np.inf, None, None)
        for c1 in g1:
            for c2 in g2:
                val, b = objective(c1, c2)
                if val < best[0]:
                    best = (val, np.array([c1, c2]), b)
        center = best[1]
    return best[2], center


def lbfgs_enet_logistic(X, a, weights, lam1, lam2):
    """Weighted elastic-net logistic fit via the positive/negative split,
    solved with bound-constrained L-BFGS-B.  Returns (intercept, coef)."""
    X = np.asarray(X, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    n, p = X.shape

    def fun(theta):
        b = theta[0]
        plus = theta[1 : p + 1]
        minus = theta[p + 1 :]
        coef = plus - minus
        eta = b + X @ coef
        mu = sigmoid(eta)
        loss = np.sum(log1pexp(eta) - a * eta)
        val = loss + lam2 * coef @ coef + lam1 * weights @ (plus + minus)
        g_eta = mu - a
        g_coef = X.T @ g_eta + 2.0 * lam2 * coef
        grad = np.empty(2 * p + 1)
        grad[0] = g_eta.sum()
        grad[1 : p + 1] = g_coef + lam1 * weights
        grad[p + 1 :] = -g_coef + lam1 * weights
        return val, grad

    bounds = [(None, None)] + [(0.0, None)] * (2 * p)
    res = minimize(
        fun,
        np.zeros(2 * p + 1),
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-10},
    )
    theta = res.x
    coef = theta[1 : X.shape[1] + 1] - theta[X.shape[1] + 1 :]
    return float(theta[0]), coef


def kkt_violations(X, a, fit, weights, lam1, lam2):
    """First-order optimality residuals of a penalized fit, evaluated on
    the raw minimizer.

    Returns (stationarity, zero_excess): the largest |grad_j + 2 lam2
    coef_j + lam1 w_j sign(coef_j)| over nonzero coordinates, and the
    largest |grad_j| - lam1 w_j over zero coordinates (negative when the
    subgradient condition holds with room to spare).
    """
    Xv = X.values if hasattr(X, "values") else np.asarray(X, dtype=np.float64)
    p_hat = sigmoid(fit.intercept + Xv @ fit.raw_coefficients)
    grad = Xv.T @ (p_hat - a)
    w = weights.weights if hasattr(weights, "weights") else np.asarray(weights)
    coef = fit.raw_coefficients
    nz = coef != 0.0
    stationarity = 0.0
    if nz.any():
        resid = grad[nz] + 2.0 * lam2 * coef[nz] + lam1 * w[nz] * np.sign(coef[nz])
        stationarity = float(np.max(np.abs(resid)))
    zero_excess = -np.inf
    if (~nz).any():
        zero_excess = float(np.max(np.abs(grad[~nz]) - lam1 * w[~nz]))
    return stationarity, zero_excess


def replay_greedy_match(pairs, unmatched, scores, a, with_replacement, caliper):
    """Verify a greedy matching step by step.

    For every emitted pair, checks that no eligible control at that
    moment was strictly closer and that the chosen control has the lowest
    index among the equidistant eligibles; for every unmatched treated,
    checks that no eligible control sat inside the caliper (or that no
    control remained).  Returns True when every step is consistent.
    """
    scores = np.asarray(scores, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    controls = [int(c) for c in np.flatnonzero(a == 0.0)]
    available = set(controls)
    matched_treated = set()
    for t, c in pairs:
        if a[t] != 1.0 or a[c] != 0.0 or t in matched_treated:
            return False
        pool = available if not with_replacement else set(controls)
        if c not in pool:
            return False
        d = abs(scores[c] - scores[t])
        if caliper is not None and d > caliper:
            return False
        for other in pool:
            od = abs(scores[other] - scores[t])
            if od < d:
                return False
            if od == d and other < c:
                return False
        matched_treated.add(t)
        if not with_replacement:
            available.discard(c)
    for t in unmatched:
        if a[t] != 1.0 or t in matched_treated:
            return False
        pool = available if not with_replacement else set(controls)
        if not pool:
            continue
        if caliper is None:
            return False  # with controls left, every treated must match
        if any(abs(scores[other] - scores[t]) <= caliper for other in pool):
            return False
    treated_count = int((a == 1.0).sum())
    return len(pairs) + len(unmatched) == treated_count


def best_matching_total_gap(scores, a, k):
    """Minimum total |score gap| over every matching of exactly k pairs
    (without replacement), by exhaustive enumeration.  Tiny inputs only."""
    scores = np.asarray(scores, dtype=np.float64)
    treated = list(np.flatnonzero(a == 1.0))
    controls = list(np.flatnonzero(a == 0.0))
    best = np.inf
    for t_sub in itertools.combinations(treated, k):
        for c_sub in itertools.permutations(controls, k):
            total = sum(abs(scores[t] - scores[c]) for t, c in zip(t_sub, c_sub))
            best = min(best, total)
    return best
