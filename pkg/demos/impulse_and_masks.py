"""Impulse responses, support widths, and the stationary masks.

Refining a unit impulse shows how far one control point's influence
reaches: 2n-point schemes spread over a width of 4n - 1, (2n+1)-point
schemes over 4n + 1, independent of the fitted degree.  With unit weights
the refinement is linear and its mask rows are ordinary least-squares fits
of unit impulses; the degree-1 4-point mask is the classic
(0.325, 0.275, 0.225, 0.175).
"""

import os

import numpy as np

from l1subdiv import basic_limit, constant_weight_mask, scheme_from_width, support_width
from l1subdiv.cli import write_curve_csv
from l1subdiv.refine1d import ControlPolygon

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

print("support widths measured from 6 refinement levels (tol 1e-12):")
for width in (4, 5, 10, 11):
    for d in (1, 2, 3):
        samples = basic_limit(scheme_from_width(width, d), 6)
        measured = support_width(samples, 1e-12)
        print(f"  {width:2d}-point, degree {d}: {measured:.4f}")
        if d == 2:
            poly = ControlPolygon(
                samples.values,
                level=samples.level,
                start=float(samples.params[0]),
                spacing=float(samples.params[1] - samples.params[0]),
            )
            write_curve_csv(os.path.join(OUT, f"impulse_{width}pt_d2.csv"), poly)

print("\nconstant-weight masks (rows are the two new points per old point):")
for width, d in ((4, 1), (6, 2)):
    mask = constant_weight_mask(scheme_from_width(width, d))
    with np.printoptions(precision=4, suppress=True):
        print(f"  {width}-point degree {d}:\n{mask}")
