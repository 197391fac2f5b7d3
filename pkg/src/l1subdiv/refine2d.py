"""Bivariate non-tensor-product subdivision driver.

Each refinement step fits a genuine bivariate polynomial (degree 1 or 2) to
every square window of the mesh with the robust reweighted fit and evaluates
it at four fractional offsets, quadrupling the grid.  The fit sees the whole
(2n)^2 or (2n+1)^2 window at once rather than composing two univariate
passes, which is what lets it smooth noise and outliers isotropically.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .local_fit import COND_LIMIT, FitConfig, _irls_batch, design_matrix_2d, exponent_pairs
from .refine1d import BOUNDARY_POLICIES, _resolve_threads, _stencil_indices, _summarize_fits

__all__ = [
    "GridMesh",
    "SchemeSpec2D",
    "abscissae_2d",
    "refine_once_2d",
    "subdivide_2d",
]

_CHUNK = 256


@dataclass
class GridMesh:
    """Rectangular grid of control values at one refinement level.

    ``values`` is ``(R, C)`` for scalar data or ``(R, C, k)`` for k-vector
    data (surface points).  ``topology``, ``start`` and ``spacing`` are per
    axis; grid point (i, j) sits at parameters
    ``(start[0] + i * spacing[0], start[1] + j * spacing[1])``.
    """

    values: np.ndarray
    level: int = 0
    topology: tuple = ("open", "open")
    start: tuple = (0.0, 0.0)
    spacing: tuple = (1.0, 1.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (2, 3):
            raise ValueError("mesh values must be a 2-D or 3-D array")
        if not np.isfinite(self.values).all():
            raise ValueError("mesh values must all be finite")
        if len(self.topology) != 2 or any(t not in ("open", "closed") for t in self.topology):
            raise ValueError(f"topology must be two of 'open'/'closed', got {self.topology!r}")
        if self.level < 0:
            raise ValueError("level must be non-negative")

    @property
    def shape(self):
        return self.values.shape[:2]

    def axis_params(self, axis):
        """Parameter values along one axis."""
        return self.start[axis] + self.spacing[axis] * np.arange(self.values.shape[axis])


@dataclass(frozen=True)
class SchemeSpec2D:
    """A bivariate scheme: a degree <= 2 fit plus per-axis boundary policy."""

    fit: FitConfig
    boundary: tuple = ("shrink", "shrink")

    def __post_init__(self):
        if self.fit.d > 2:
            raise ValueError("bivariate schemes support degrees 1 and 2 only")
        if len(self.boundary) != 2 or any(b not in BOUNDARY_POLICIES for b in self.boundary):
            raise ValueError(
                f"boundary must be two of {BOUNDARY_POLICIES}, got {self.boundary!r}"
            )


def abscissae_2d(parity):
    """The four (r, s) evaluation offsets of one binary refinement step.

    Listed in output order (2i, 2j), (2i+1, 2j), (2i, 2j+1), (2i+1, 2j+1):
    even parity uses (1/4, 1/4), (3/4, 1/4), (1/4, 3/4), (3/4, 3/4); odd
    parity uses the same pattern with -1/4 and 1/4.
    """
    if parity == "even":
        lo, hi = 0.25, 0.75
    elif parity == "odd":
        lo, hi = -0.25, 0.25
    else:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    return [(lo, lo), (hi, lo), (lo, hi), (hi, hi)]


def refine_once_2d(mesh, spec, threads=None, stats=None):
    """One bivariate refinement step: four new values per eligible center.

    Vector-valued meshes are fitted componentwise.  New values land at grid
    positions (2i + di, 2j + dj) for di, dj in {0, 1}; with shrink boundaries
    the output is 2 * (centers per axis), with periodic wrap it is exactly
    twice the input size per axis.  ``threads`` and ``stats`` behave as in
    :func:`l1subdiv.refine1d.refine_once`.
    """
    cfg = spec.fit
    if cfg.d > 2:
        raise ValueError("bivariate schemes support degrees 1 and 2 only")
    offsets = cfg.offsets()
    values = mesh.values
    rows, cols = values.shape[:2]

    bounds = tuple(
        "periodic" if mesh.topology[axis] == "closed" else spec.boundary[axis]
        for axis in (0, 1)
    )
    centers_r, idx_r = _stencil_indices(rows, offsets, bounds[0])
    centers_s, idx_s = _stencil_indices(cols, offsets, bounds[1])

    xs = abscissae_2d(cfg.parity)
    X = design_matrix_2d(offsets, cfg.d)
    X_eval = np.array(
        [[r**a1 * s**a2 for a1, a2 in exponent_pairs(cfg.d)] for r, s in xs]
    )

    vector_valued = values.ndim == 3
    n_comp = values.shape[2] if vector_valued else 1
    size = offsets.size
    n_r, n_s = centers_r.shape[0], centers_s.shape[0]
    n_centers = n_r * n_s

    out = np.empty((2 * n_r, 2 * n_s, n_comp))
    iters = np.empty(n_centers * n_comp, dtype=int)
    conv = np.empty(n_centers * n_comp, dtype=bool)
    cond = np.empty(n_centers * n_comp)
    threads = _resolve_threads(threads)

    def run_chunk(begin):
        end = min(begin + _CHUNK, n_centers)
        block = np.arange(begin, end)
        ci, cj = block // n_s, block % n_s
        # gather (chunk, L, L[, k]) windows in row-major center order
        window = values[idx_r[ci][:, :, None], idx_s[cj][:, None, :]]
        flat = window.reshape(end - begin, size * size, -1)
        batch = flat.transpose(0, 2, 1).reshape(-1, size * size)
        beta, it, cv, _, _, cnd = _irls_batch(
            batch, X, cfg.delta, cfg.epsilon, cfg.max_iters
        )
        evals = beta @ X_eval.T  # (rows, 4)
        evals = evals.reshape(end - begin, n_comp, 4).transpose(0, 2, 1)
        for a, (di, dj) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
            out[2 * ci + di, 2 * cj + dj] = evals[:, a]
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

    new_values = out if vector_valued else out[:, :, 0]
    new_start = tuple(
        mesh.start[axis]
        + (float((centers_r, centers_s)[axis][0]) + xs[0][axis]) * mesh.spacing[axis]
        for axis in (0, 1)
    )
    return GridMesh(
        values=new_values,
        level=mesh.level + 1,
        topology=mesh.topology,
        start=new_start,
        spacing=(mesh.spacing[0] / 2, mesh.spacing[1] / 2),
    )


def subdivide_2d(mesh, spec, levels, threads=None, stats=None):
    """Apply :func:`refine_once_2d` ``levels`` times (0 returns the input)."""
    if levels < 0:
        raise ValueError(f"levels must be >= 0, got {levels}")
    for _ in range(levels):
        mesh = refine_once_2d(mesh, spec, threads=threads, stats=stats)
    return mesh
