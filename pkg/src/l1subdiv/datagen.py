"""Test-data generators: benchmark functions, a torus grid, seeded noise.

The noise generator uses numpy's PCG64 bit generator through
``numpy.random.default_rng`` with ``standard_normal`` draws; this algorithm
identifier travels in experiment manifests so runs reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .refine1d import ControlPolygon
from .refine2d import GridMesh

__all__ = [
    "RNG_ALGORITHM",
    "TEST_FUNCTIONS",
    "NoiseSpec",
    "sample_function",
    "torus_values",
    "torus_grid",
    "add_noise",
]

#: fixed, portable pseudo-random recipe used by :func:`add_noise`
RNG_ALGORITHM = "numpy-pcg64-standard_normal"


def _g1(x):
    return x**2 - 5 * x + 3


def _g2(x):
    return x**3 - x**2 - 5 * x + 3


def _g3(x):
    return 0.7670 * np.exp(0.4040 * x)


def _g4(x):
    # jump at 0; the value at 0 itself belongs to the low side
    return np.where(np.asarray(x, dtype=float) > 0, 10.0, -10.0)


def _g5(x):
    return (x / 40.0 - 1.0) ** 3 + np.cos(2.0 * x / 5.0)


def _g6(x):
    return np.exp(-x / 3.0) * np.sin(3.0 * x)


TEST_FUNCTIONS = {"g1": _g1, "g2": _g2, "g3": _g3, "g4": _g4, "g5": _g5, "g6": _g6}


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded Gaussian perturbation plus explicit outlier offsets.

    ``outliers`` holds (index, offset) pairs for polygons and
    (row, column, offset) triples for meshes; offsets apply after the noise,
    added to every component of vector-valued points.
    """

    sigma: float = 0.0
    seed: int = 0
    outliers: tuple = ()

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def sample_function(name, domain, count):
    """Uniform samples of a named test function as an open control polygon."""
    if name not in TEST_FUNCTIONS:
        raise ValueError(
            f"unknown function {name!r}; choose one of {sorted(TEST_FUNCTIONS)}"
        )
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise ValueError(f"domain must satisfy a < b, got [{a}, {b}]")
    if count < 2:
        raise ValueError(f"need at least 2 samples, got {count}")
    x = np.linspace(a, b, count)
    return ControlPolygon(
        points=TEST_FUNCTIONS[name](x),
        level=0,
        topology="open",
        start=a,
        spacing=(b - a) / (count - 1),
    )


def torus_values(c1, c2, nu1, nu2):
    """Points (x, y, z) of the torus with tube radius c1 and center radius c2.

    Broadcasts over nu1, nu2; the last axis of the result holds x, y, z.
    """
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    ring = c2 + c1 * np.cos(nu2)
    return np.stack(
        [ring * np.cos(nu1), ring * np.sin(nu1), c1 * np.sin(nu2) * np.ones_like(nu1)],
        axis=-1,
    )


def torus_grid(c1, c2, res):
    """Closed grid mesh sampling the torus at uniform angles.

    ``res = (N1, N2)`` grid cells over 0 <= nu1, nu2 < 2*pi (the seam is not
    duplicated; both axes are marked closed).
    """
    if not 0 < c1 < c2:
        raise ValueError(f"torus radii must satisfy 0 < c1 < c2, got {c1}, {c2}")
    n1, n2 = int(res[0]), int(res[1])
    if n1 < 3 or n2 < 3:
        raise ValueError(f"resolution must be at least 3x3, got {res}")
    nu1 = 2 * np.pi * np.arange(n1) / n1
    nu2 = 2 * np.pi * np.arange(n2) / n2
    values = torus_values(c1, c2, nu1[:, None], nu2[None, :])
    return GridMesh(
        values=values,
        level=0,
        topology=("closed", "closed"),
        start=(0.0, 0.0),
        spacing=(2 * np.pi / n1, 2 * np.pi / n2),
    )


def add_noise(data, spec):
    """Perturb a polygon, mesh, or plain array: Gaussian noise, then outliers.

    Deterministic for a fixed ``spec.seed`` (see :data:`RNG_ALGORITHM`);
    returns a new object of the same kind.
    """
    if isinstance(data, ControlPolygon):
        return replace(data, points=_perturb(data.points, spec, grid=False))
    if isinstance(data, GridMesh):
        return replace(data, values=_perturb(data.values, spec, grid=True))
    return _perturb(np.asarray(data, dtype=float), spec, grid=np.ndim(data) > 1)


def _perturb(values, spec, grid):
    out = np.array(values, dtype=float, copy=True)
    if spec.sigma > 0:
        rng = np.random.default_rng(spec.seed)
        out += spec.sigma * rng.standard_normal(out.shape)
    for entry in spec.outliers:
        if grid:
            i, j, offset = entry
            i, j = int(i), int(j)
            if not (0 <= i < out.shape[0] and 0 <= j < out.shape[1]):
                raise ValueError(f"outlier position {(i, j)} out of range")
            out[i, j] += offset
        else:
            i, offset = entry
            i = int(i)
            if not 0 <= i < out.shape[0]:
                raise ValueError(f"outlier index {i} out of range")
            out[i] += offset
    return out
