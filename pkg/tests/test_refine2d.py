"""Tests of the bivariate non-tensor-product subdivision driver."""

import numpy as np
import pytest

from l1subdiv import oracle
from l1subdiv.local_fit import FitConfig, eval_poly_2d
from l1subdiv.refine2d import (
    GridMesh,
    SchemeSpec2D,
    abscissae_2d,
    refine_once_2d,
    subdivide_2d,
)
from l1subdiv.datagen import NoiseSpec, add_noise, torus_grid, torus_values


def quad_spec(d=2, n=2, **kwargs):
    return SchemeSpec2D(FitConfig(d=d, parity="even", n=n, **kwargs))


class TestAbscissae2D:
    def test_even(self):
        assert abscissae_2d("even") == [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]

    def test_odd(self):
        assert abscissae_2d("odd") == [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)]

    def test_cardinality(self):
        assert len(abscissae_2d("even")) == 4 and len(abscissae_2d("odd")) == 4


class TestRefineOnce2D:
    def test_constant(self):
        out = refine_once_2d(GridMesh(np.full((8, 9), 2.5)), quad_spec())
        np.testing.assert_allclose(out.values, 2.5, atol=1e-12)
        assert out.shape == (10, 12)  # 2 * (dim - stencil span)

    def test_bilinear_reproduction(self):
        i, j = np.meshgrid(np.arange(10.0), np.arange(11.0), indexing="ij")
        out = refine_once_2d(GridMesh(i + j), quad_spec(d=1))
        p = out.axis_params(0)[:, None] + out.axis_params(1)[None, :]
        np.testing.assert_allclose(out.values, p, atol=1e-11)

    def test_quadratic_reproduction_along_axis(self):
        i, _ = np.meshgrid(np.arange(10.0), np.arange(10.0), indexing="ij")
        out = refine_once_2d(GridMesh(i**2), quad_spec(d=2))
        want = np.broadcast_to(out.axis_params(0)[:, None] ** 2, out.values.shape)
        np.testing.assert_allclose(out.values, want, atol=1e-10)

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            SchemeSpec2D(FitConfig(d=3, parity="even", n=2))

    def test_undersized_mesh(self):
        with pytest.raises(ValueError):
            refine_once_2d(GridMesh(np.zeros((3, 8))), quad_spec())

    def test_transpose_commutes(self):
        rng = np.random.default_rng(0)
        v = rng.uniform(-5, 5, (9, 11))
        a = refine_once_2d(GridMesh(v), quad_spec()).values
        b = refine_once_2d(GridMesh(v.T), quad_spec()).values
        assert np.abs(a - b.T).max() <= 1e-10 * max(1.0, np.abs(a).max())

    def test_componentwise_bitwise(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(-5, 5, (9, 9, 3))
        joint = refine_once_2d(GridMesh(v), quad_spec()).values
        for c in range(3):
            single = refine_once_2d(GridMesh(v[:, :, c]), quad_spec()).values
            np.testing.assert_array_equal(joint[:, :, c], single)

    def test_threads_bitwise_identical(self):
        rng = np.random.default_rng(2)
        mesh = GridMesh(rng.uniform(-5, 5, (20, 20)), topology=("closed", "closed"))
        seq = refine_once_2d(mesh, quad_spec(), threads=1).values
        par = refine_once_2d(mesh, quad_spec(), threads=4).values
        np.testing.assert_array_equal(seq, par)

    def test_periodic_doubles_dimensions(self):
        mesh = GridMesh(np.random.default_rng(3).uniform(-1, 1, (6, 7)),
                        topology=("closed", "closed"))
        out = refine_once_2d(mesh, quad_spec())
        assert out.shape == (12, 14)

    def test_constant_weight_masks_match_impulse_oracle(self):
        # with frozen unit weights the step is linear; its action on unit
        # impulses must equal the independently solved bivariate fits
        spec = quad_spec(max_iters=0)
        rng = np.random.default_rng(4)
        base = GridMesh(np.zeros((6, 6)))
        # linearity: response to a random mesh equals superposition of impulses
        v = rng.uniform(-2, 2, (6, 6))
        combined = refine_once_2d(GridMesh(v), spec).values
        total = np.zeros_like(combined)
        for i in range(6):
            for j in range(6):
                impulse = np.zeros((6, 6))
                impulse[i, j] = v[i, j]
                total += refine_once_2d(GridMesh(impulse), spec).values
        assert np.abs(total - combined).max() <= 1e-10 * max(1.0, np.abs(combined).max())
        # one stencil's four new values equal the oracle fit evaluations
        w = np.ones((4, 4))
        window = v[1:5, 1:5]
        beta = oracle.brute_ls_2d(window, w, 2)
        out = refine_once_2d(GridMesh(v), spec)
        got = np.array([out.values[2 + di, 2 + dj] for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1))])
        want = np.array([eval_poly_2d(beta, r, s) for r, s in abscissae_2d("even")])
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


class TestSubdivide2D:
    def test_zero_levels(self):
        mesh = GridMesh(np.zeros((5, 5)))
        assert subdivide_2d(mesh, quad_spec(), 0) is mesh

    def test_clean_torus_beats_input_discretization(self):
        tor = torus_grid(2.0, 5.0, (12, 12))
        out = subdivide_2d(tor, quad_spec(max_iters=6), 2)
        ref = torus_values(2.0, 5.0, out.axis_params(0)[:, None], out.axis_params(1)[None, :])
        rms = np.sqrt(np.mean(np.sum((out.values - ref) ** 2, axis=-1)))
        # discretization error of the input mesh: bilinear cell midpoints
        v = tor.values
        mid = 0.25 * (v + np.roll(v, -1, 0) + np.roll(v, -1, 1) + np.roll(np.roll(v, -1, 0), -1, 1))
        m1 = tor.axis_params(0) + tor.spacing[0] / 2
        m2 = tor.axis_params(1) + tor.spacing[1] / 2
        rms_in = np.sqrt(np.mean(np.sum((mid - torus_values(2.0, 5.0, m1[:, None], m2[None, :])) ** 2, axis=-1)))
        assert rms <= rms_in

    def test_noisy_torus_rms_decreases(self):
        tor = torus_grid(2.0, 5.0, (12, 12))
        noisy = add_noise(tor, NoiseSpec(sigma=0.2, seed=1, outliers=((3, 4, 1.0), (8, 9, -1.0))))
        levels = [noisy]
        for _ in range(2):
            levels.append(subdivide_2d(levels[-1], quad_spec(max_iters=6), 1))
        rms = []
        for mesh in levels:
            ref = torus_values(2.0, 5.0, mesh.axis_params(0)[:, None], mesh.axis_params(1)[None, :])
            rms.append(np.sqrt(np.mean(np.sum((mesh.values - ref) ** 2, axis=-1))))
        assert rms[1] < rms[0] and rms[2] < rms[1]

    def test_parameters_track_torus_angles(self):
        tor = torus_grid(2.0, 5.0, (8, 8))
        out = subdivide_2d(tor, quad_spec(d=1), 1)
        assert out.shape == (16, 16)
        assert out.spacing[0] == pytest.approx(tor.spacing[0] / 2)
        # first new angle sits a quarter old-cell above the first old angle
        assert out.axis_params(0)[0] == pytest.approx(tor.spacing[0] * 0.25)
