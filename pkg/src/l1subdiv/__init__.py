"""Robust subdivision schemes for fitting noisy scattered data.

The package refines control polygons and grid meshes with data-dependent
subdivision rules built from smoothed-l1 local polynomial fits: each new
point is a low-degree polynomial fitted to a sliding window by iteratively
reweighted least squares and evaluated between the old points.  Outliers
get small weights and stop propagating into the refined curve or surface,
while polynomial sections of the data reproduce exactly up to the fitted
degree.

Entry points:

- :mod:`l1subdiv.local_fit` — the reweighted fitting engine (1-D and 2-D).
- :mod:`l1subdiv.refine1d` / :mod:`l1subdiv.refine2d` — subdivision drivers.
- :mod:`l1subdiv.analysis` — impulse responses, support width, overshoot,
  reproduction error.
- :mod:`l1subdiv.datagen` — benchmark functions, torus grids, seeded noise.
- :mod:`l1subdiv.experiments` — reproducible benchmark manifests.
- ``l1subdiv`` console script — see ``l1subdiv --help``.

``l1subdiv.oracle`` contains deliberately independent re-implementations
used only by the test suite and is not part of the public API.
"""

from .local_fit import (
    FitConfig,
    FitResult,
    IllConditionedWarning,
    compute_weights,
    compute_weights_2d,
    eval_poly,
    eval_poly_2d,
    irls_fit,
    irls_fit_2d,
    ols_init,
    ols_init_2d,
    ols_init_2d_closed_form,
    ols_init_closed_form,
    wls_solve,
)
from .refine1d import (
    ControlPolygon,
    SchemeSpec,
    abscissae,
    constant_weight_mask,
    masks_d1_closed_form,
    masks_d2_closed_form,
    refine_once,
    scheme_from_width,
    subdivide,
)
from .refine2d import GridMesh, SchemeSpec2D, abscissae_2d, refine_once_2d, subdivide_2d
from .analysis import LimitSamples, basic_limit, overshoot, reproduction_error, support_width
from .datagen import (
    RNG_ALGORITHM,
    TEST_FUNCTIONS,
    NoiseSpec,
    add_noise,
    sample_function,
    torus_grid,
    torus_values,
)
from .experiments import EXPERIMENTS, ExperimentManifest, run_experiment

__version__ = "0.1.0"

__all__ = [
    "FitConfig",
    "FitResult",
    "IllConditionedWarning",
    "compute_weights",
    "compute_weights_2d",
    "eval_poly",
    "eval_poly_2d",
    "irls_fit",
    "irls_fit_2d",
    "ols_init",
    "ols_init_2d",
    "ols_init_2d_closed_form",
    "ols_init_closed_form",
    "wls_solve",
    "ControlPolygon",
    "SchemeSpec",
    "abscissae",
    "constant_weight_mask",
    "masks_d1_closed_form",
    "masks_d2_closed_form",
    "refine_once",
    "scheme_from_width",
    "subdivide",
    "GridMesh",
    "SchemeSpec2D",
    "abscissae_2d",
    "refine_once_2d",
    "subdivide_2d",
    "LimitSamples",
    "basic_limit",
    "overshoot",
    "reproduction_error",
    "support_width",
    "RNG_ALGORITHM",
    "TEST_FUNCTIONS",
    "NoiseSpec",
    "add_noise",
    "sample_function",
    "torus_grid",
    "torus_values",
    "EXPERIMENTS",
    "ExperimentManifest",
    "run_experiment",
]
