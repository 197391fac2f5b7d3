"""Local polynomial fitting by iteratively reweighted least squares.

Fits a low-degree polynomial to a short window ("stencil") of uniformly
spaced samples by minimizing a smoothed sum of absolute residuals

    sum_r sqrt((f_r - p(r))**2 + delta),    delta > 0,

instead of the ordinary sum of squares.  The minimizer is found by the
classic reweighting loop: start from the least-squares fit, then repeatedly
solve weighted least-squares problems whose weights are the inverse smoothed
residual magnitudes.  Small residuals get large weights (capped at
delta**-0.5), gross outliers get small ones, so the fit tracks the bulk of
the data and ignores isolated bad samples.

Both univariate stencils (2n or 2n+1 points at integer offsets) and square
bivariate stencils are supported.  All functions are pure and thread-safe.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FitConfig",
    "FitResult",
    "IllConditionedWarning",
    "COND_LIMIT",
    "stencil_offsets",
    "design_matrix",
    "power_moments",
    "normal_system",
    "objective_value",
    "compute_weights",
    "ols_init",
    "ols_init_closed_form",
    "wls_solve",
    "irls_fit",
    "eval_poly",
    "exponent_pairs",
    "design_matrix_2d",
    "compute_weights_2d",
    "objective_value_2d",
    "ols_init_2d",
    "ols_init_2d_closed_form",
    "irls_fit_2d",
    "eval_poly_2d",
]

#: condition-estimate threshold above which a solve is flagged as unreliable
COND_LIMIT = 1e12


class IllConditionedWarning(UserWarning):
    """The normal equations were solved but look numerically fragile."""


@dataclass(frozen=True)
class FitConfig:
    """Configuration of one local polynomial fit.

    Parameters
    ----------
    d : int
        Degree of the fitted polynomial, 1..3 (bivariate fits allow 1..2).
    parity : str
        ``"even"`` for 2n-point stencils at offsets -n+1..n, ``"odd"`` for
        (2n+1)-point stencils at offsets -n..n.
    n : int
        Stencil half width, n >= 2.
    delta : float
        Smoothing parameter of the regularized l1 objective, > 0.  Small
        values approximate the true absolute-deviation fit more closely.
    epsilon : float
        Stop once no coefficient moves by more than this between sweeps.
    max_iters : int
        Cap on the number of reweighted solves after the initial
        least-squares fit.  0 returns the plain least-squares coefficients,
        which is exactly the constant-weight (non-robust) scheme.
    """

    d: int
    parity: str = "even"
    n: int = 2
    delta: float = 1e-4
    epsilon: float = 1e-6
    max_iters: int = 6

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if not 1 <= int(self.d) <= 3:
            raise ValueError(f"degree must be 1, 2 or 3, got {self.d}")
        if int(self.n) < 2:
            raise ValueError(f"stencil half width must be >= 2, got {self.n}")
        if 2 * self.n < self.d + 1:
            raise ValueError(
                f"stencil of half width {self.n} cannot determine degree {self.d}"
            )
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iters) < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")

    @property
    def stencil_size(self) -> int:
        return 2 * self.n if self.parity == "even" else 2 * self.n + 1

    def offsets(self) -> np.ndarray:
        return stencil_offsets(self.parity, self.n)


@dataclass
class FitResult:
    """Outcome of one reweighted fit.

    ``objective_trace[m]`` is the smoothed-l1 objective after sweep m
    (entry 0 belongs to the initial least-squares fit); the sequence is
    non-increasing up to round-off.  ``final_weights`` are the weights that
    produced ``beta`` through the last weighted solve (for ``max_iters=0``
    they are the weights implied by the initial fit).
    """

    beta: np.ndarray
    iterations: int
    converged: bool
    final_weights: np.ndarray
    objective_trace: np.ndarray
    warnings: list = field(default_factory=list)


def stencil_offsets(parity, n):
    """Integer sample offsets of a stencil: -n+1..n (even) or -n..n (odd)."""
    if parity == "even":
        return np.arange(-n + 1, n + 1, dtype=float)
    if parity == "odd":
        return np.arange(-n, n + 1, dtype=float)
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def design_matrix(offsets, d):
    """Monomial design matrix with columns 1, r, ..., r**d."""
    offsets = np.asarray(offsets, dtype=float)
    return offsets[:, None] ** np.arange(d + 1)[None, :]


def power_moments(offsets, weights, order):
    """Weighted power sums sum_r r**b * w_r for b = 0..order."""
    offsets = np.asarray(offsets, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return np.array(
        [(offsets**b * weights).sum() for b in range(order + 1)]
    )


def normal_system(values, weights, offsets, d):
    """Weighted normal equations (matrix, rhs) of a degree-d fit.

    The matrix entry (a, b) is the weighted power sum of order a+b and the
    rhs entry a is ``sum_r r**a * w_r * f_r``; the matrix is symmetric and
    positive definite for positive weights.
    """
    X = design_matrix(offsets, d)
    matrix = (X * np.asarray(weights, float)[:, None]).T @ X
    rhs = X.T @ (np.asarray(weights, float) * np.asarray(values, float))
    return matrix, rhs


def eval_poly(beta, r):
    """Evaluate sum_a beta[a] * r**a (Horner form; r may be an array)."""
    beta = np.asarray(beta, dtype=float)
    result = np.zeros_like(np.asarray(r, dtype=float))
    for c in beta[::-1]:
        result = result * r + c
    return result if result.ndim else float(result)


def _infer_offsets(length):
    # stencil length determines parity and half width unambiguously
    if length % 2 == 0:
        n = length // 2
        parity = "even"
    else:
        n = (length - 1) // 2
        parity = "odd"
    if n < 1:
        raise ValueError(f"stencil of length {length} is too short")
    return stencil_offsets(parity, n)


def _check_stencil(stencil, cfg):
    values = np.asarray(stencil, dtype=float)
    if values.ndim != 1:
        raise ValueError("univariate stencil must be one-dimensional")
    if values.shape[0] != cfg.stencil_size:
        raise ValueError(
            f"stencil has {values.shape[0]} values, expected {cfg.stencil_size} "
            f"for parity={cfg.parity!r}, n={cfg.n}"
        )
    if not np.isfinite(values).all():
        raise ValueError("stencil values must all be finite")
    return values


def compute_weights(stencil, beta, delta):
    """Dynamic weights w_r = ((f_r - p(r))**2 + delta)**-0.5.

    Every weight lies in (0, delta**-0.5]; an exact fit hits the upper bound.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    values = np.asarray(stencil, dtype=float)
    offsets = _infer_offsets(values.shape[0])
    res = values - eval_poly(beta, offsets)
    return 1.0 / np.sqrt(res * res + delta)


def objective_value(stencil, beta, delta):
    """Smoothed-l1 objective sum_r sqrt((f_r - p(r))**2 + delta)."""
    values = np.asarray(stencil, dtype=float)
    offsets = _infer_offsets(values.shape[0])
    res = values - eval_poly(beta, offsets)
    return float(np.sqrt(res * res + delta).sum())


def _cond_estimate(matrix):
    # cheap 1-norm condition estimate; the systems are at most 6x6
    try:
        inv = np.linalg.inv(matrix)
    except np.linalg.LinAlgError:
        return np.inf
    norm = np.abs(matrix).sum(axis=-2).max(axis=-1)
    inv_norm = np.abs(inv).sum(axis=-2).max(axis=-1)
    return norm * inv_norm


def ols_init(stencil, cfg):
    """Plain least-squares coefficients, the starting point of every fit."""
    values = _check_stencil(stencil, cfg)
    matrix, rhs = normal_system(values, np.ones_like(values), cfg.offsets(), cfg.d)
    return np.linalg.solve(matrix, rhs)


def wls_solve(stencil, weights, d):
    """Minimize the weighted sum of squares over degree-d polynomials.

    With unit weights this equals :func:`ols_init`.  An ill-conditioned
    system (estimate above ``COND_LIMIT``) emits :class:`IllConditionedWarning`
    but still returns the solution.
    """
    values = np.asarray(stencil, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != values.shape:
        raise ValueError("weights must have the same shape as the stencil")
    if not (weights > 0).all():
        raise ValueError("all weights must be strictly positive")
    offsets = _infer_offsets(values.shape[0])
    if values.shape[0] < d + 1:
        raise ValueError("stencil too small for the requested degree")
    matrix, rhs = normal_system(values, weights, offsets, d)
    if _cond_estimate(matrix) > COND_LIMIT:
        warnings.warn(
            "weighted normal equations are ill-conditioned; "
            "coefficients may be inaccurate",
            IllConditionedWarning,
            stacklevel=2,
        )
    return np.linalg.solve(matrix, rhs)


# ---------------------------------------------------------------------------
# batched IRLS kernel
#
# The subdivision drivers fit thousands of stencils per refinement step, all
# sharing one design matrix.  The kernel below runs the reweighting loop for a
# whole batch at once.  Every reduction runs along the stencil axis of a
# single row, so a row's result is bitwise independent of which other rows
# share the batch; the drivers rely on this for order-independent parallel
# evaluation.
# ---------------------------------------------------------------------------


def _batch_normal_solve(X, weights, values):
    # X: (L, p), weights/values: (N, L) -> beta (N, p)
    XX = X[:, :, None] * X[:, None, :]  # (L, p, p)
    M = (weights[:, :, None, None] * XX[None]).sum(axis=1)
    rhs = ((weights * values)[:, :, None] * X[None]).sum(axis=1)
    return np.linalg.solve(M, rhs[..., None])[..., 0], M


def _irls_batch(values, X, delta, epsilon, max_iters):
    """Reweighting loop over a batch of stencils sharing design matrix X.

    Returns beta (N, p), iterations (N,), converged (N,), the weights used in
    each row's last solve (N, L), the objective trace (N, max_iters + 1)
    padded with the last value, and a condition estimate of each row's final
    system (N,).
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n_rows, _ = values.shape

    beta, M = _batch_normal_solve(X, np.ones_like(values), values)
    res = values - beta @ X.T
    smooth = np.sqrt(res * res + delta)
    weights = 1.0 / smooth
    weights_used = weights.copy()

    trace = np.empty((n_rows, max_iters + 1))
    trace[:, 0] = smooth.sum(axis=1)

    iterations = np.zeros(n_rows, dtype=int)
    converged = np.zeros(n_rows, dtype=bool)
    active = np.arange(n_rows)

    for m in range(1, max_iters + 1):
        if active.size == 0:
            trace[:, m] = trace[:, m - 1]
            continue
        beta_new, M_active = _batch_normal_solve(X, weights[active], values[active])
        step = np.abs(beta_new - beta[active]).max(axis=1)
        res = values[active] - beta_new @ X.T
        smooth = np.sqrt(res * res + delta)

        weights_used[active] = weights[active]
        beta[active] = beta_new
        weights[active] = 1.0 / smooth
        iterations[active] = m
        trace[:, m] = trace[:, m - 1]
        trace[active, m] = smooth.sum(axis=1)
        M[active] = M_active

        done = step < epsilon
        converged[active[done]] = True
        active = active[~done]

    return beta, iterations, converged, weights_used, trace, _cond_estimate(M)


def irls_fit(stencil, cfg):
    """Robust local polynomial fit of one univariate stencil.

    Runs the reweighting loop of :mod:`l1subdiv.local_fit`: least-squares
    start, then up to ``cfg.max_iters`` weighted solves with weights from
    :func:`compute_weights`, stopping early once the largest coefficient
    change drops below ``cfg.epsilon``.

    Returns
    -------
    FitResult
        Coefficients, iteration count, convergence flag, the weights of the
        last solve and the objective trace.
    """
    values = _check_stencil(stencil, cfg)
    X = design_matrix(cfg.offsets(), cfg.d)
    beta, iters, conv, w_used, trace, cond = _irls_batch(
        values[None, :], X, cfg.delta, cfg.epsilon, cfg.max_iters
    )
    notes = []
    if cond[0] > COND_LIMIT:
        notes.append("ill-conditioned normal equations in final solve")
    return FitResult(
        beta=beta[0],
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        final_weights=w_used[0],
        objective_trace=trace[0, : iters[0] + 1],
        warnings=notes,
    )


def ols_init_closed_form(stencil, cfg):
    """Least-squares starting coefficients from the explicit summation
    formulas, degree by degree.

    For degree 3 the four coefficients come from nested weighted sums of the
    data; lower degrees reuse the same formulas with the suppressed top
    coefficients pinned to zero.  Agrees with :func:`ols_init` to solver
    accuracy and exists as an independent cross-check of the generic path.
    """
    values = _check_stencil(stencil, cfg)
    n = cfg.n
    r = cfg.offsets()
    if cfg.parity == "even":
        b3 = 0.0
        if cfg.d == 3:
            num = 35.0 * (
                10 * r**3 - 15 * r**2 + 11 * r - 6 * n**2 * r + 3 * n**2 - 3
            )
            den = n * (n**2 - 1) * (4 * n**2 - 1) * (4 * n**2 - 9)
            b3 = float((num / den * values).sum())
        b2 = 0.0
        if cfg.d >= 2:
            num = 15.0 * (3 * r**2 - 3 * r - n**2 + 1)
            den = 2 * n * (n**2 - 1) * (4 * n**2 - 1)
            b2 = float((num / den * values).sum()) - 1.5 * b3
        b1 = (
            float((3.0 * (2 * r - 1) / (n * (4 * n**2 - 1)) * values).sum())
            - b2
            - (3 * n**2 + 2) / 5.0 * b3
        )
        b0 = (
            values.sum() / (2 * n)
            - 0.5 * b1
            - (2 * n**2 + 1) / 6.0 * b2
            - n**2 / 2.0 * b3
        )
    else:
        b3 = 0.0
        if cfg.d == 3:
            num = 35.0 * (5 * r**3 - 3 * n**2 * r - 3 * n * r + r)
            den = n * (n**2 - 1) * (n + 2) * (4 * n**2 - 1) * (2 * n + 3)
            b3 = float((num / den * values).sum())
        b2 = 0.0
        if cfg.d >= 2:
            num = 15.0 * (3 * r**2 - n**2 - n)
            den = n * (n + 1) * (4 * n**2 - 1) * (2 * n + 3)
            b2 = float((num / den * values).sum())
        b1 = (
            float((3.0 * r / (n * (n + 1) * (2 * n + 1)) * values).sum())
            - (3 * n**2 + 3 * n - 1) / 5.0 * b3
        )
        b0 = values.sum() / (2 * n + 1) - n * (n + 1) / 3.0 * b2
    return np.array([b0, b1, b2, b3][: cfg.d + 1])


# ---------------------------------------------------------------------------
# bivariate fits
# ---------------------------------------------------------------------------


def exponent_pairs(d):
    """Monomial exponents (a1, a2) with a1 + a2 <= d, ordered by total degree
    and then by descending first exponent: (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
    """
    return [
        (a1, total - a1)
        for total in range(d + 1)
        for a1 in range(total, -1, -1)
    ]


def design_matrix_2d(offsets, d):
    """Design matrix over a square grid of offsets, one row per (r, s) cell
    in row-major order, one column per exponent pair."""
    offsets = np.asarray(offsets, dtype=float)
    r = np.repeat(offsets, offsets.size)
    s = np.tile(offsets, offsets.size)
    return np.column_stack([r**a1 * s**a2 for a1, a2 in exponent_pairs(d)])


def _check_stencil_2d(stencil, cfg):
    values = np.asarray(stencil, dtype=float)
    size = cfg.stencil_size
    if values.shape != (size, size):
        raise ValueError(
            f"bivariate stencil must be {size}x{size} for parity={cfg.parity!r}, "
            f"n={cfg.n}, got {values.shape}"
        )
    if not np.isfinite(values).all():
        raise ValueError("stencil values must all be finite")
    if cfg.d > 2:
        raise ValueError("bivariate fits support degrees 1 and 2 only")
    return values


def eval_poly_2d(beta, r, s):
    """Evaluate sum_a beta[a] * r**a1 * s**a2 at one or many points."""
    beta = np.asarray(beta, dtype=float)
    d = {3: 1, 6: 2}.get(beta.shape[-1])
    if d is None:
        raise ValueError("bivariate coefficient vector must have length 3 or 6")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    out = sum(
        beta[..., a] * r**a1 * s**a2
        for a, (a1, a2) in enumerate(exponent_pairs(d))
    )
    return out if np.ndim(out) else float(out)


def compute_weights_2d(stencil, beta, delta):
    """Bivariate dynamic weights, same formula as :func:`compute_weights`."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    values = np.asarray(stencil, dtype=float)
    offsets = _infer_offsets(values.shape[0])
    r = offsets[:, None]
    s = offsets[None, :]
    res = values - eval_poly_2d(beta, r, s)
    return 1.0 / np.sqrt(res * res + delta)


def objective_value_2d(stencil, beta, delta):
    """Smoothed-l1 objective of a bivariate fit."""
    values = np.asarray(stencil, dtype=float)
    offsets = _infer_offsets(values.shape[0])
    res = values - eval_poly_2d(beta, offsets[:, None], offsets[None, :])
    return float(np.sqrt(res * res + delta).sum())


def ols_init_2d(stencil, cfg):
    """Plain least-squares bivariate coefficients (generic solve)."""
    values = _check_stencil_2d(stencil, cfg)
    X = design_matrix_2d(cfg.offsets(), cfg.d)
    flat = values.reshape(-1)
    matrix = X.T @ X
    return np.linalg.solve(matrix, X.T @ flat)


def ols_init_2d_closed_form(stencil, cfg):
    """Bivariate least-squares starting coefficients from the explicit
    summation formulas (degree 2, with degree 1 by zeroing the quadratic
    coefficients).  Cross-check for :func:`ols_init_2d`."""
    values = _check_stencil_2d(stencil, cfg)
    n = cfg.n
    offsets = cfg.offsets()
    r = offsets[:, None]
    s = offsets[None, :]
    if cfg.parity == "even":
        b5 = b4 = b3 = 0.0
        if cfg.d == 2:
            den_q = 4 * n**2 * (n**2 - 1) * (4 * n**2 - 1)
            b5 = float((-15.0 * (3 * s - 1 - 3 * s**2 + n**2) / den_q * values).sum())
            b4 = float(
                (9.0 * (4 * r * s + 1 - 2 * r - 2 * s) / (n**2 * (4 * n**2 - 1) ** 2) * values).sum()
            )
            b3 = float((-15.0 * (n**2 + 3 * r - 3 * r**2 - 1) / den_q * values).sum())
        den_l = 2 * n**2 * (4 * n**2 - 1)
        b2 = float((3.0 * (2 * s - 1) / den_l * values).sum()) - 0.5 * b4 - b5
        b1 = float((3.0 * (2 * r - 1) / den_l * values).sum()) - b3 - 0.5 * b4
        b0 = (
            values.sum() / (4 * n**2)
            - 0.5 * b1
            - 0.5 * b2
            - (2 * n**2 + 1) / 6.0 * b3
            - 0.25 * b4
            - (2 * n**2 + 1) / 6.0 * b5
        )
    else:
        b5 = b4 = b3 = 0.0
        if cfg.d == 2:
            den_q = n * (n + 1) * (2 * n - 1) * (2 * n + 1) ** 2 * (2 * n + 3)
            b5 = float((-15.0 * (n**2 + n - 3 * s**2) / den_q * values).sum())
            b4 = float((9.0 * r * s / (n**2 * (n + 1) ** 2 * (2 * n + 1) ** 2) * values).sum())
            b3 = float((-15.0 * (n**2 + n - 3 * r**2) / den_q * values).sum())
        den_l = n * (n + 1) * (2 * n + 1) ** 2
        b2 = float((3.0 * s / den_l * values).sum())
        b1 = float((3.0 * r / den_l * values).sum())
        b0 = values.sum() / (2 * n + 1) ** 2 - n * (n + 1) / 3.0 * (b3 + b5)
    coeffs = [b0, b1, b2, b3, b4, b5]
    return np.array(coeffs[: 3 if cfg.d == 1 else 6])


def irls_fit_2d(stencil, cfg):
    """Robust bivariate polynomial fit of one square stencil.

    Same loop as :func:`irls_fit` with the grid flattened row-major and a
    3- or 6-column design matrix.
    """
    values = _check_stencil_2d(stencil, cfg)
    X = design_matrix_2d(cfg.offsets(), cfg.d)
    beta, iters, conv, w_used, trace, cond = _irls_batch(
        values.reshape(1, -1), X, cfg.delta, cfg.epsilon, cfg.max_iters
    )
    notes = []
    if cond[0] > COND_LIMIT:
        notes.append("ill-conditioned normal equations in final solve")
    size = cfg.stencil_size
    return FitResult(
        beta=beta[0],
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        final_weights=w_used[0].reshape(size, size),
        objective_trace=trace[0, : iters[0] + 1],
        warnings=notes,
    )
