"""Univariate subdivision driver.

One refinement step slides a window over the control polygon, fits a robust
local polynomial to each window (:func:`l1subdiv.local_fit.irls_fit`), and
evaluates the fit at fixed fractional offsets to produce the new, denser
polygon.  Because the weights react to the data, the resulting scheme
suppresses outliers; forcing ``max_iters=0`` freezes the weights at one and
recovers the classical linear least-squares scheme.

The closed-form masks for degree 1 and 2 fits are transcribed here as well;
they are algebraically identical to the fit-then-evaluate path and serve as
cross-checks of it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .local_fit import (
    COND_LIMIT,
    FitConfig,
    _irls_batch,
    design_matrix,
    power_moments,
    stencil_offsets,
)

__all__ = [
    "BOUNDARY_POLICIES",
    "THREADS_ENV_VAR",
    "ControlPolygon",
    "SchemeSpec",
    "scheme_from_width",
    "abscissae",
    "refine_once",
    "subdivide",
    "masks_d1_closed_form",
    "masks_d2_closed_form",
    "constant_weight_mask",
]

#: shrink drops points near open ends, periodic wraps, mirror reflects
BOUNDARY_POLICIES = ("shrink", "periodic", "mirror")

#: caps refinement thread count; 0 means one thread per CPU
THREADS_ENV_VAR = "SUBDIV_L1_THREADS"

# all-at-once batches would be fine, but fixed-size chunks make the threaded
# and sequential paths run literally the same per-chunk arithmetic
_CHUNK = 256


@dataclass
class ControlPolygon:
    """Ordered control values at one refinement level.

    ``points`` is ``(N,)`` for scalar samples or ``(N, k)`` for k-vector
    samples (curve points).  ``start`` and ``spacing`` place point ``i`` at
    parameter ``start + i * spacing``; refinement keeps them current so
    reproduction tests know where to evaluate reference functions.
    ``explicit_params`` overrides the derived grid; file loaders use it so a
    reloaded polygon echoes its parameters bit for bit.
    """

    points: np.ndarray
    level: int = 0
    topology: str = "open"
    start: float = 0.0
    spacing: float = 1.0
    explicit_params: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim not in (1, 2):
            raise ValueError("polygon points must be a 1-D or 2-D array")
        if not np.isfinite(self.points).all():
            raise ValueError("polygon points must all be finite")
        if self.topology not in ("open", "closed"):
            raise ValueError(f"topology must be 'open' or 'closed', got {self.topology!r}")
        if self.level < 0:
            raise ValueError("level must be non-negative")
        if self.explicit_params is not None:
            self.explicit_params = np.asarray(self.explicit_params, dtype=float)
            if self.explicit_params.shape != (self.points.shape[0],):
                raise ValueError("explicit_params must align with points")

    def __len__(self):
        return self.points.shape[0]

    @property
    def params(self) -> np.ndarray:
        """Parameter value of every point."""
        if self.explicit_params is not None:
            return self.explicit_params
        return self.start + self.spacing * np.arange(len(self))


@dataclass(frozen=True)
class SchemeSpec:
    """A subdivision scheme: a local fit plus arity and boundary policy."""

    fit: FitConfig
    arity: int = 2
    boundary: str = "shrink"

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError(f"arity must be >= 2, got {self.arity}")
        if self.boundary not in BOUNDARY_POLICIES:
            raise ValueError(
                f"boundary must be one of {BOUNDARY_POLICIES}, got {self.boundary!r}"
            )
        # fail early on unsupported parity/arity combinations
        abscissae(self.fit.parity, self.arity)

    @property
    def width(self) -> int:
        """Stencil width h; the scheme family name is D_{h,d}."""
        return self.fit.stencil_size


def scheme_from_width(width, d, arity=2, boundary="shrink", **fit_kwargs):
    """Build a :class:`SchemeSpec` from the stencil width h of D_{h,d}.

    Even widths give 2n-point schemes, odd widths (2n+1)-point schemes.
    Extra keyword arguments go to :class:`~l1subdiv.local_fit.FitConfig`.
    """
    if width % 2 == 0:
        cfg = FitConfig(d=d, parity="even", n=width // 2, **fit_kwargs)
    else:
        cfg = FitConfig(d=d, parity="odd", n=(width - 1) // 2, **fit_kwargs)
    return SchemeSpec(fit=cfg, arity=arity, boundary=boundary)


def abscissae(parity, arity):
    """Evaluation abscissae of one refinement step, in emission order.

    Even-parity schemes evaluate at (2M-1)/(2N) for M = 1..N (binary: 1/4
    and 3/4); odd-parity schemes with even arity evaluate at M/(2N) for odd
    M between -(N-1) and N-1 (binary: -1/4 and 1/4).  Odd parity with odd
    arity > 2 has no consistent abscissa list and is rejected.
    """
    if arity < 2:
        raise ValueError(f"arity must be >= 2, got {arity}")
    if parity == "even":
        return (2 * np.arange(1, arity + 1) - 1) / (2 * arity)
    if parity == "odd":
        if arity % 2 != 0:
            raise ValueError(
                f"odd-parity schemes with odd arity {arity} are not supported"
            )
        return np.arange(-(arity - 1), arity, 2) / (2 * arity)
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get(THREADS_ENV_VAR, "").strip()
        threads = int(env) if env else 1
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads < 0:
        raise ValueError(f"thread count must be >= 0, got {threads}")
    return threads


def _stencil_indices(length, offsets, boundary):
    """Index matrix (centers x stencil) under the boundary policy."""
    lo, hi = int(offsets[0]), int(offsets[-1])
    span = hi - lo
    if boundary == "shrink":
        if length < span + 1:
            raise ValueError(
                f"polygon of {length} points is too short for a "
                f"{span + 1}-point stencil"
            )
        centers = np.arange(-lo, length - hi)
        return centers, centers[:, None] + offsets.astype(int)[None, :]
    if length < span + 1:
        raise ValueError(
            f"polygon of {length} points is too short for a "
            f"{span + 1}-point stencil"
        )
    centers = np.arange(length)
    idx = centers[:, None] + offsets.astype(int)[None, :]
    if boundary == "periodic":
        return centers, np.mod(idx, length)
    if boundary == "mirror":
        idx = np.abs(idx)
        idx = np.where(idx > length - 1, 2 * (length - 1) - idx, idx)
        return centers, idx
    raise ValueError(f"unknown boundary policy {boundary!r}")


def _summarize_fits(iterations, converged, cond, cond_limit):
    return {
        "fits": int(iterations.shape[0]),
        "iterations_mean": float(iterations.mean()),
        "iterations_max": int(iterations.max()),
        "converged_fraction": float(converged.mean()),
        "ill_conditioned": int((cond > cond_limit).sum()),
    }


def refine_once(polygon, spec, threads=None, stats=None):
    """One refinement step: ``arity`` new points per eligible stencil center.

    Each new point is the robust local fit of its own stencil evaluated at
    one abscissa; vector-valued points are fitted componentwise.  New points
    are computed independently in fixed-size chunks, sequentially or on a
    thread pool, with bitwise-identical results either way.

    Parameters
    ----------
    polygon : ControlPolygon
    spec : SchemeSpec
    threads : int, optional
        Number of worker threads; default reads the ``SUBDIV_L1_THREADS``
        environment variable (unset means 1, 0 means one per CPU).
    stats : list, optional
        If given, a dict of per-step fit statistics (iteration counts,
        convergence fraction, ill-conditioned solves) is appended to it.
    """
    cfg = spec.fit
    boundary = "periodic" if polygon.topology == "closed" else spec.boundary
    offsets = cfg.offsets()
    centers, idx = _stencil_indices(len(polygon), offsets, boundary)
    xs = abscissae(cfg.parity, spec.arity)
    X = design_matrix(offsets, cfg.d)
    X_eval = design_matrix(xs, cfg.d)

    points = polygon.points
    vector_valued = points.ndim == 2
    n_comp = points.shape[1] if vector_valued else 1
    n_centers = centers.shape[0]
    n_new = n_centers * spec.arity

    out = np.empty((n_new, n_comp))
    iters = np.empty(n_centers * n_comp, dtype=int)
    conv = np.empty(n_centers * n_comp, dtype=bool)
    cond = np.empty(n_centers * n_comp)
    threads = _resolve_threads(threads)

    def run_chunk(begin):
        end = min(begin + _CHUNK, n_centers)
        window = points[idx[begin:end]]  # (c, L) or (c, L, k)
        if vector_valued:
            batch = window.transpose(0, 2, 1).reshape(-1, offsets.size)
        else:
            batch = window
        beta, it, cv, _, _, cnd = _irls_batch(
            batch, X, cfg.delta, cfg.epsilon, cfg.max_iters
        )
        values = beta @ X_eval.T  # (rows, arity)
        if vector_valued:
            values = values.reshape(end - begin, n_comp, spec.arity)
            values = values.transpose(0, 2, 1).reshape(-1, n_comp)
        else:
            values = values.reshape(-1, 1)
        out[begin * spec.arity : end * spec.arity] = values
        iters[begin * n_comp : end * n_comp] = it
        conv[begin * n_comp : end * n_comp] = cv
        cond[begin * n_comp : end * n_comp] = cnd

    starts = range(0, n_centers, _CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for begin in starts:
            run_chunk(begin)

    if stats is not None:
        stats.append(_summarize_fits(iters, conv, cond, COND_LIMIT))

    new_points = out if vector_valued else out[:, 0]
    h = polygon.spacing
    new_start = polygon.start + (centers[0] + xs[0]) * h
    return ControlPolygon(
        points=new_points,
        level=polygon.level + 1,
        topology=polygon.topology,
        start=new_start,
        spacing=h / spec.arity,
    )


def subdivide(polygon, spec, levels, threads=None, stats=None):
    """Apply :func:`refine_once` ``levels`` times (0 returns the input)."""
    if levels < 0:
        raise ValueError(f"levels must be >= 0, got {levels}")
    for _ in range(levels):
        polygon = refine_once(polygon, spec, threads=threads, stats=stats)
    return polygon


# ---------------------------------------------------------------------------
# closed-form masks
#
# For degree 1 and 2 the evaluated weighted fit collapses to short polynomials
# in the stencil offset whose coefficients are the weighted power sums
# alpha_b = sum_r r**b w_r.  The formulas below are transcribed verbatim;
# equivalence with the generic path is enforced by tests.
# ---------------------------------------------------------------------------


def _moments_for_mask(weights, parity, order):
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1:
        raise ValueError("weights must be one-dimensional")
    if not (weights > 0).all():
        raise ValueError("all weights must be strictly positive")
    size = weights.shape[0]
    n = size // 2 if parity == "even" else (size - 1) // 2
    r = stencil_offsets(parity, n)
    if r.shape[0] != size:
        raise ValueError(f"weight vector of length {size} does not match parity {parity!r}")
    return r, power_moments(r, weights, order)


def masks_d1_closed_form(weights, parity):
    """Stencil masks of the degree-1 scheme, one row per abscissa.

    Row 0 produces the even-indexed new point, row 1 the odd-indexed one.
    Applying a row to the stencil values equals evaluating the weighted
    linear fit at the corresponding abscissa, and each row sums to 1.
    """
    r, a = _moments_for_mask(weights, parity, 2)
    weights = np.asarray(weights, dtype=float)
    chi0 = a[0] * a[2] - a[1] ** 2
    t1 = 4 * a[2] - 4 * r * a[1] + r * a[0] - a[1]
    if parity == "even":
        t2 = 4 * a[2] - 4 * r * a[1] + 3 * r * a[0] - 3 * a[1]
        rows = (t1, t2)
    else:
        t3 = 4 * a[2] - 4 * r * a[1] - r * a[0] + a[1]
        rows = (t3, t1)
    return np.vstack([row * weights / (4 * chi0) for row in rows])


def masks_d2_closed_form(weights, parity):
    """Stencil masks of the degree-2 scheme, one row per abscissa.

    Same contract as :func:`masks_d1_closed_form` with the quadratic-fit
    coefficient polynomials and normalizer 16 * lambda0 / alpha0.
    """
    r, a = _moments_for_mask(weights, parity, 4)
    weights = np.asarray(weights, dtype=float)
    chi0 = a[0] * a[2] - a[1] ** 2
    chi1 = a[0] * a[3] - a[1] * a[2]
    chi3 = a[0] * a[4] - a[2] ** 2
    lam0 = chi0 * chi3 - chi1**2
    q1 = (
        r**2 * a[0] * a[2]
        + 4 * a[0] * r * a[4]
        - 4 * a[0] * a[3] * r**2
        - a[0] * a[3] * r
        - a[2] ** 2
        - 4 * a[2] ** 2 * r
        - 16 * r**2 * a[2] ** 2
        + a[1] * a[2] * r
        + 4 * a[2] * a[3]
        + 4 * a[2] * a[1] * r**2
        + 16 * a[2] * a[3] * r
        + 16 * a[4] * a[2]
        - 16 * a[1] * a[4] * r
        + a[1] * a[3]
        - 16 * a[3] ** 2
        - r**2 * a[1] ** 2
        + 16 * r**2 * a[1] * a[3]
        - 4 * a[1] * a[4]
    )
    if parity == "even":
        q2 = (
            9 * r**2 * a[0] * a[2]
            + 12 * a[0] * r * a[4]
            - 9 * a[0] * a[3] * r
            - 12 * a[0] * a[3] * r**2
            - 12 * a[2] ** 2 * r
            - 9 * a[2] ** 2
            - 16 * r**2 * a[2] ** 2
            + 9 * a[1] * a[2] * r
            + 12 * a[2] * a[1] * r**2
            + 16 * a[4] * a[2]
            + 12 * a[2] * a[3]
            + 16 * a[2] * a[3] * r
            + 9 * a[1] * a[3]
            - 16 * a[1] * a[4] * r
            - 12 * a[1] * a[4]
            - 9 * r**2 * a[1] ** 2
            + 16 * r**2 * a[1] * a[3]
            - 16 * a[3] ** 2
        )
        rows = (q1, q2)
    else:
        q3 = (
            -16 * r**2 * a[2] ** 2
            + 16 * a[2] * a[4]
            + 16 * a[2] * a[3] * r
            - 16 * a[1] * a[4] * r
            + 16 * r**2 * a[1] * a[3]
            - 16 * a[3] ** 2
            - 4 * a[0] * r * a[4]
            + 4 * a[0] * a[3] * r**2
            + 4 * r * a[2] ** 2
            - 4 * a[2] * a[3]
            - 4 * a[2] * a[1] * r**2
            + 4 * a[1] * a[4]
            + r**2 * a[0] * a[2]
            - r**2 * a[1] ** 2
            - a[2] ** 2
            - a[0] * a[3] * r
            + a[1] * a[3]
            + a[1] * a[2] * r
        )
        rows = (q3, q1)
    return np.vstack([row * weights * a[0] / (16 * lam0) for row in rows])


def constant_weight_mask(spec):
    """Stationary linear mask of the constant-weight (least squares) scheme.

    Column j is the unit-weight fit of the j-th unit impulse evaluated at
    every abscissa, so applying the rows reproduces the ordinary local
    least-squares refinement that the robust scheme degenerates to when all
    weights are equal.  Rows sum to 1.
    """
    cfg = spec.fit
    offsets = cfg.offsets()
    X = design_matrix(offsets, cfg.d)
    X_eval = design_matrix(abscissae(cfg.parity, spec.arity), cfg.d)
    # fitting the impulse e_j and evaluating is column j of X_eval (X^T X)^-1 X^T
    return X_eval @ np.linalg.solve(X.T @ X, X.T)
