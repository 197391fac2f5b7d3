"""Independent verification implementations for the test suite.

Everything in this module re-derives results of :mod:`l1subdiv.local_fit`
through deliberately different code paths: the normal equations are built by
explicit Python loops and solved by a hand-rolled pivoted elimination, the
smoothed-l1 objective is minimized directly instead of by reweighting, and
the exact absolute-deviation line is found by enumeration.  None of it shares
solver code with the library proper, and none of it is part of the public
API; tests import it to check the fast paths against slow, obviously-correct
ones.
"""

from __future__ import annotations

import numpy as np

from .local_fit import (
    design_matrix,
    design_matrix_2d,
    eval_poly,
    ols_init,
    ols_init_2d,
    stencil_offsets,
)

__all__ = [
    "gauss_solve",
    "brute_ls",
    "brute_ls_2d",
    "objective_gradient",
    "minimize_objective",
    "minimize_objective_2d",
    "lad_line_exact",
]


def gauss_solve(matrix, rhs):
    """Solve a small dense system by Gaussian elimination with partial
    pivoting, written out longhand so it shares nothing with the library's
    solver."""
    a = [list(map(float, row)) for row in matrix]
    b = [float(v) for v in rhs]
    size = len(b)
    for col in range(size):
        pivot = max(range(col, size), key=lambda i: abs(a[i][col]))
        if abs(a[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular system in oracle solve")
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            b[col], b[pivot] = b[pivot], b[col]
        for row in range(col + 1, size):
            factor = a[row][col] / a[col][col]
            if factor == 0.0:
                continue
            for k in range(col, size):
                a[row][k] -= factor * a[col][k]
            b[row] -= factor * b[col]
    x = [0.0] * size
    for row in range(size - 1, -1, -1):
        acc = b[row]
        for k in range(row + 1, size):
            acc -= a[row][k] * x[k]
        x[row] = acc / a[row][row]
    return np.array(x)


def _weighted_normal_equations(points, values, weights, powers):
    # explicit loops on purpose; powers is a list of exponent tuples
    size = len(powers)
    matrix = [[0.0] * size for _ in range(size)]
    rhs = [0.0] * size
    for point, value, weight in zip(points, values, weights):
        basis = [
            float(np.prod([c**e for c, e in zip(point, exps)]))
            for exps in powers
        ]
        for i in range(size):
            rhs[i] += weight * basis[i] * value
            for j in range(size):
                matrix[i][j] += weight * basis[i] * basis[j]
    return matrix, rhs


def brute_ls(stencil, weights, d):
    """Weighted least-squares coefficients by loop-built normal equations
    and :func:`gauss_solve`.  Must match ``local_fit.wls_solve``."""
    values = np.asarray(stencil, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if not (weights > 0).all():
        raise ValueError("all weights must be strictly positive")
    offsets = _offsets_for(values.shape[0])
    points = [(r,) for r in offsets]
    powers = [(a,) for a in range(d + 1)]
    matrix, rhs = _weighted_normal_equations(points, values, weights, powers)
    return gauss_solve(matrix, rhs)


def brute_ls_2d(stencil, weights, d):
    """Bivariate counterpart of :func:`brute_ls` on a square stencil."""
    values = np.asarray(stencil, dtype=float)
    weights = np.asarray(weights, dtype=float)
    offsets = _offsets_for(values.shape[0])
    points = [(r, s) for r in offsets for s in offsets]
    powers = [
        (a1, total - a1) for total in range(d + 1) for a1 in range(total, -1, -1)
    ]
    matrix, rhs = _weighted_normal_equations(
        points, values.reshape(-1), weights.reshape(-1), powers
    )
    return gauss_solve(matrix, rhs)


def _offsets_for(length):
    if length % 2 == 0:
        return stencil_offsets("even", length // 2)
    return stencil_offsets("odd", (length - 1) // 2)


def objective_gradient(stencil, beta, delta):
    """Closed-form gradient of the smoothed-l1 objective.

    Component a is ``-sum_r r**a * res_r / sqrt(res_r**2 + delta)``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    values = np.asarray(stencil, dtype=float)
    offsets = _offsets_for(values.shape[0])
    res = values - eval_poly(np.asarray(beta, float), offsets)
    scaled = res / np.sqrt(res * res + delta)
    return np.array(
        [-(offsets**a * scaled).sum() for a in range(len(np.atleast_1d(beta)))]
    )


def _minimize_smooth(values, X, delta, start, grad_tol, max_iters):
    """Damped Newton descent on sum sqrt(res**2 + delta) from ``start``.

    The Hessian is X^T diag(delta * (res**2+delta)**-1.5) X; steps solve it
    with :func:`gauss_solve` and backtrack until the objective decreases.
    Plain first-order descent stalls badly for small delta (the curvature
    spread grows like 1/delta), so the Newton direction is used instead; the
    minimizer is identical because the objective is smooth and strictly
    convex.

    ``grad_tol`` is relative to the data scale: the stop test is
    ``max|grad| <= grad_tol * max(1, max|f|)``.  An absolute target can sit
    below the float64 floor (one ulp of beta moves the gradient by more).
    """
    beta = np.asarray(start, dtype=float).copy()
    tol = grad_tol * max(1.0, float(np.abs(values).max()))

    def objective(b):
        res = values - X @ b
        return float(np.sqrt(res * res + delta).sum())

    current = objective(beta)
    for _ in range(max_iters):
        res = values - X @ beta
        smooth = np.sqrt(res * res + delta)
        grad = -X.T @ (res / smooth)
        if np.abs(grad).max() <= tol:
            return beta
        curvature = delta / smooth**3
        hessian = (X * curvature[:, None]).T @ X
        try:
            direction = gauss_solve(hessian, -grad)
        except ZeroDivisionError:
            direction = -grad
        if grad @ direction >= 0:
            direction = -grad
        slope = grad @ direction
        if -slope <= 1e-12 * (1.0 + abs(current)):
            # predicted decrease is below the float resolution of the
            # objective; the raw Newton step still refines the iterate
            beta = beta + direction
            current = objective(beta)
            continue
        step = 1.0
        for _ in range(60):
            candidate = beta + step * direction
            value = objective(candidate)
            if value <= current + 1e-4 * step * slope:
                break
            step *= 0.5
        beta = beta + step * direction
        current = objective(beta)
    res = values - X @ beta
    grad = -X.T @ (res / np.sqrt(res * res + delta))
    if np.abs(grad).max() > tol:
        raise RuntimeError(
            f"direct minimizer did not reach gradient tolerance {tol}"
        )
    return beta


def minimize_objective(stencil, cfg, grad_tol=1e-10, max_iters=500):
    """Directly minimize the smoothed-l1 objective of a univariate stencil.

    Serves as the reference the reweighted fit must match; raises
    ``RuntimeError`` if the gradient tolerance is not reached.
    """
    values = np.asarray(stencil, dtype=float)
    X = design_matrix(cfg.offsets(), cfg.d)
    start = ols_init(values, cfg)
    return _minimize_smooth(values, X, cfg.delta, start, grad_tol, max_iters)


def minimize_objective_2d(stencil, cfg, grad_tol=1e-10, max_iters=500):
    """Bivariate counterpart of :func:`minimize_objective`."""
    values = np.asarray(stencil, dtype=float)
    X = design_matrix_2d(cfg.offsets(), cfg.d)
    start = ols_init_2d(values, cfg)
    return _minimize_smooth(values.reshape(-1), X, cfg.delta, start, grad_tol, max_iters)


def lad_line_exact(stencil, x=None):
    """Exact least-absolute-deviations line through scattered samples.

    Some optimal LAD line interpolates two of the data points, so enumerating
    all point pairs and scoring their total absolute deviation finds a global
    optimum.  Ties break toward the smallest slope, then the smallest
    intercept.  Returns (intercept, slope).
    """
    values = np.asarray(stencil, dtype=float)
    if x is None:
        x = _offsets_for(values.shape[0])
    x = np.asarray(x, dtype=float)
    if values.shape[0] < 2:
        raise ValueError("need at least two points for a line fit")
    if np.unique(x).shape[0] != x.shape[0]:
        raise ValueError("abscissae must be distinct")
    best = None
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            slope = (values[j] - values[i]) / (x[j] - x[i])
            intercept = values[i] - slope * x[i]
            total = float(np.abs(values - (intercept + slope * x)).sum())
            key = (total, slope, intercept)
            if best is None or key < best:
                best = key
    return np.array([best[2], best[1]])
