"""Scheme diagnostics: impulse responses, support, overshoot, reproduction.

These helpers quantify the qualitative behavior of a scheme: how far a
single control point's influence spreads (support width), whether refined
data overshoots a jump (Gibbs-type oscillation), and how closely refined
samples of a reference function stay on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .refine1d import ControlPolygon, subdivide

__all__ = [
    "LimitSamples",
    "basic_limit",
    "support_width",
    "overshoot",
    "reproduction_error",
]


@dataclass
class LimitSamples:
    """Samples of a refined polygon on its dyadic parameter grid."""

    params: np.ndarray
    values: np.ndarray
    level: int

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.params.ndim != 1 or self.params.shape[0] != self.values.shape[0]:
            raise ValueError("params and values must align one-to-one")
        if self.params.size > 1 and not (np.diff(self.params) > 0).all():
            raise ValueError("params must be strictly increasing")
        if not np.isfinite(self.values).all():
            raise ValueError("values must all be finite")


def basic_limit(spec, levels, padding=None):
    """Refine a unit impulse ``levels`` times.

    The impulse sits on zeros padded ``padding`` points to each side
    (default 4n); less padding than 4n would let end effects reach the
    impulse's influence region and is rejected.  Returns the samples with
    their dyadic parameters, impulse at parameter 0.
    """
    n = spec.fit.n
    if padding is None:
        padding = 4 * n
    if padding < 4 * n:
        raise ValueError(
            f"padding {padding} is too small; boundary effects reach the "
            f"support unless padding >= {4 * n}"
        )
    points = np.zeros(2 * padding + 1)
    points[padding] = 1.0
    polygon = ControlPolygon(points, level=0, start=-float(padding), spacing=1.0)
    refined = subdivide(polygon, spec, levels)
    return LimitSamples(params=refined.params, values=refined.points, level=refined.level)


def support_width(samples, tol):
    """Width of the parameter interval where the samples exceed ``tol``.

    At a finite level k the influence fringe of the impulse has only covered
    a (1 - 2**-k) fraction of its limit extent (each level adds half the
    remaining fringe), so the raw measured width is scaled by 1/(1 - 2**-k)
    to estimate the limit support; one dyadic spacing of slack absorbs
    fringe values that dip below ``tol``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    mask = np.abs(samples.values) > tol
    if samples.values.ndim > 1:
        mask = mask.any(axis=tuple(range(1, samples.values.ndim)))
    if not mask.any():
        return 0.0
    nz = np.flatnonzero(mask)
    raw = samples.params[nz[-1]] - samples.params[nz[0]]
    if samples.level == 0:
        return float(raw)
    return float(raw / (1.0 - 2.0 ** -samples.level))


def overshoot(samples, low, high):
    """Normalized spill of the sample values outside [low, high].

    Returns (max(values) - high)_+ + (low - min(values))_+ scaled by the
    range high - low; 0 means the refined data stayed inside the band.
    """
    if not low < high:
        raise ValueError(f"low must be below high, got [{low}, {high}]")
    values = samples.values
    over = max(0.0, float(values.max()) - high)
    under = max(0.0, low - float(values.min()))
    return (over + under) / (high - low)


def reproduction_error(samples, reference):
    """Max-abs and RMS deviation of the samples from ``reference(params)``."""
    ref = np.asarray(reference(samples.params), dtype=float)
    dev = samples.values - ref
    return float(np.abs(dev).max()), float(np.sqrt(np.mean(dev * dev)))
