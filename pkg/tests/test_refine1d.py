"""Tests of the univariate subdivision driver and its closed-form masks."""

import numpy as np
import pytest

from l1subdiv import oracle
from l1subdiv.local_fit import FitConfig, eval_poly, wls_solve
from l1subdiv.refine1d import (
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


class TestAbscissae:
    def test_even_binary(self):
        np.testing.assert_allclose(abscissae("even", 2), [0.25, 0.75])

    def test_odd_binary(self):
        np.testing.assert_allclose(abscissae("odd", 2), [-0.25, 0.25])

    def test_even_ternary(self):
        np.testing.assert_allclose(abscissae("even", 3), [1 / 6, 1 / 2, 5 / 6])

    def test_odd_quaternary(self):
        np.testing.assert_allclose(abscissae("odd", 4), [-3 / 8, -1 / 8, 1 / 8, 3 / 8])

    def test_odd_parity_odd_arity_rejected(self):
        with pytest.raises(ValueError):
            abscissae("odd", 3)

    def test_arity_validated(self):
        with pytest.raises(ValueError):
            abscissae("even", 1)


class TestSchemeSpec:
    def test_from_width(self):
        even = scheme_from_width(10, 3)
        assert even.fit.parity == "even" and even.fit.n == 5 and even.width == 10
        odd = scheme_from_width(11, 2)
        assert odd.fit.parity == "odd" and odd.fit.n == 5 and odd.width == 11

    def test_bad_boundary(self):
        with pytest.raises(ValueError):
            SchemeSpec(FitConfig(d=1, parity="even", n=2), boundary="clamp")

    def test_bad_arity_combination(self):
        with pytest.raises(ValueError):
            SchemeSpec(FitConfig(d=1, parity="odd", n=2), arity=3)


class TestRefineOnce:
    def test_constant(self):
        out = refine_once(ControlPolygon(np.full(9, 4.2)), scheme_from_width(4, 1))
        np.testing.assert_allclose(out.points, 4.2, atol=1e-13)

    def test_linear_reproduction_with_parameters(self):
        out = refine_once(ControlPolygon(np.arange(12.0)), scheme_from_width(4, 1))
        np.testing.assert_allclose(out.points, out.params, atol=1e-12)
        assert out.level == 1 and out.spacing == 0.5

    def test_step_overshoot_contrast(self):
        steps = np.where(np.arange(40) < 20, -10.0, 10.0)
        poly = ControlPolygon(steps)
        cubic = subdivide(poly, scheme_from_width(10, 3), 2)
        linear = subdivide(poly, scheme_from_width(10, 1), 2)
        assert cubic.points.max() > 10.0
        assert linear.points.max() <= 10.0 + 1e-9

    def test_too_short(self):
        with pytest.raises(ValueError):
            refine_once(ControlPolygon(np.zeros(5)), scheme_from_width(10, 1))

    def test_vector_valued_componentwise(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-3, 3, (15, 2))
        spec = scheme_from_width(5, 2)
        joint = refine_once(ControlPolygon(pts), spec).points
        for c in range(2):
            single = refine_once(ControlPolygon(pts[:, c]), spec).points
            np.testing.assert_array_equal(joint[:, c], single)

    def test_closed_forces_periodic(self):
        values = np.sin(np.linspace(0, 2 * np.pi, 12, endpoint=False))
        out = refine_once(ControlPolygon(values, topology="closed"), scheme_from_width(4, 1))
        assert len(out) == 24 and out.topology == "closed"

    def test_mirror_boundary_keeps_length(self):
        poly = ControlPolygon(np.arange(8.0))
        out = refine_once(poly, scheme_from_width(4, 1, boundary="mirror"))
        assert len(out) == 16

    def test_threads_bitwise_identical(self):
        rng = np.random.default_rng(1)
        poly = ControlPolygon(rng.uniform(-5, 5, 700))
        spec = scheme_from_width(10, 3)
        seq = refine_once(poly, spec, threads=1)
        par = refine_once(poly, spec, threads=4)
        np.testing.assert_array_equal(seq.points, par.points)

    def test_ternary_refinement(self):
        spec = scheme_from_width(4, 1, arity=3)
        out = refine_once(ControlPolygon(np.arange(10.0)), spec)
        assert len(out) == 3 * 7 and out.spacing == pytest.approx(1 / 3)
        np.testing.assert_allclose(out.points, out.params, atol=1e-12)

    def test_threads_env_var(self, monkeypatch):
        monkeypatch.setenv("SUBDIV_L1_THREADS", "2")
        poly = ControlPolygon(np.random.default_rng(2).uniform(-5, 5, 300))
        spec = scheme_from_width(4, 1)
        out_env = refine_once(poly, spec)
        monkeypatch.delenv("SUBDIV_L1_THREADS")
        np.testing.assert_array_equal(out_env.points, refine_once(poly, spec).points)

    def test_threads_zero_means_auto(self):
        poly = ControlPolygon(np.random.default_rng(4).uniform(-5, 5, 300))
        spec = scheme_from_width(4, 1)
        auto = refine_once(poly, spec, threads=0)
        np.testing.assert_array_equal(auto.points, refine_once(poly, spec, threads=1).points)
        with pytest.raises(ValueError):
            refine_once(poly, spec, threads=-2)

    def test_stats_collection(self):
        stats = []
        poly = ControlPolygon(np.random.default_rng(3).uniform(-5, 5, 30))
        subdivide(poly, scheme_from_width(4, 2), 2, stats=stats)
        assert len(stats) == 2
        assert stats[0]["fits"] == 27 and 0 <= stats[0]["converged_fraction"] <= 1


class TestSubdivide:
    def test_zero_levels(self):
        poly = ControlPolygon(np.arange(10.0))
        out = subdivide(poly, scheme_from_width(4, 1), 0)
        assert out is poly

    def test_cubic_reproduction(self):
        g2 = lambda x: x**3 - x**2 - 5 * x + 3
        poly = ControlPolygon(g2(np.arange(30.0)))
        out = subdivide(poly, scheme_from_width(10, 3), 4)
        scale = np.abs(g2(out.params)).max()
        assert np.abs(out.points - g2(out.params)).max() <= 1e-8 * scale

    def test_linear_scheme_does_not_reproduce_quadratic(self):
        g1 = lambda x: x**2 - 5 * x + 3
        x = np.linspace(0, 10, 30)
        poly = ControlPolygon(g1(x), start=0.0, spacing=x[1] - x[0])
        out = subdivide(poly, scheme_from_width(10, 1), 4)
        assert np.abs(out.points - g1(out.params)).max() > 1e-3

    @pytest.mark.parametrize("width,d", [(4, 1), (5, 2), (6, 3), (7, 3)])
    def test_degree_reproduction(self, width, d):
        rng = np.random.default_rng(width * 10 + d)
        coeffs = rng.uniform(-2, 2, d + 1)
        ref = lambda x: eval_poly(coeffs, x)
        poly = ControlPolygon(ref(np.arange(24.0)))
        out = subdivide(poly, scheme_from_width(width, d), 3)
        scale = max(1.0, np.abs(ref(out.params)).max())
        assert np.abs(out.points - ref(out.params)).max() <= 1e-9 * scale

    def test_affine_invariance(self):
        rng = np.random.default_rng(11)
        f = rng.uniform(-5, 5, 25)
        spec = scheme_from_width(5, 2)
        base = subdivide(ControlPolygon(f), spec, 2).points
        # pure shift, same delta
        shifted = subdivide(ControlPolygon(f + 11.0), spec, 2).points
        assert np.abs(shifted - (base + 11.0)).max() <= 1e-9 * 12
        # scaling needs delta rescaled by a**2
        a = 3.0
        scaled_spec = scheme_from_width(5, 2, delta=a**2 * spec.fit.delta)
        scaled = subdivide(ControlPolygon(a * f), scaled_spec, 2).points
        assert np.abs(scaled - a * base).max() <= 1e-9 * max(1.0, np.abs(a * base).max())

    @pytest.mark.parametrize("width", [4, 5])
    def test_reversal_symmetry(self, width):
        rng = np.random.default_rng(width)
        f = rng.uniform(-5, 5, 20)
        spec = scheme_from_width(width, 2)
        forward = refine_once(ControlPolygon(f), spec).points
        backward = refine_once(ControlPolygon(f[::-1]), spec).points
        assert np.abs(forward - backward[::-1]).max() <= 1e-10 * max(1.0, np.abs(forward).max())


class TestMasks:
    def test_d1_unit_weight_values(self):
        mask = masks_d1_closed_form(np.ones(4), "even")
        np.testing.assert_allclose(mask[0], [0.325, 0.275, 0.225, 0.175], atol=1e-14)
        np.testing.assert_allclose(mask[1], [0.175, 0.225, 0.275, 0.325], atol=1e-14)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(21)
        for parity, size in (("even", 6), ("odd", 7)):
            for fn in (masks_d1_closed_form, masks_d2_closed_form):
                w = rng.uniform(0.05, 20, size)
                mask = fn(w, parity)
                np.testing.assert_allclose(mask.sum(axis=1), 1.0, atol=1e-12)

    def test_d2_reproduces_quadratic(self):
        w = np.ones(6)
        mask = masks_d2_closed_form(w, "even")
        r = np.arange(-2.0, 4.0)
        out = mask @ (r**2)
        np.testing.assert_allclose(out, [0.25**2, 0.75**2], atol=1e-12)

    @pytest.mark.parametrize("parity", ["even", "odd"])
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    @pytest.mark.parametrize("d", [1, 2])
    def test_matches_generic_path(self, parity, n, d):
        rng = np.random.default_rng(n * 7 + d)
        size = 2 * n if parity == "even" else 2 * n + 1
        xs = abscissae(parity, 2)
        fn = masks_d1_closed_form if d == 1 else masks_d2_closed_form
        for _ in range(200):
            w = rng.uniform(0.05, 20.0, size)
            f = rng.uniform(-10, 10, size)
            got = fn(w, parity) @ f
            want = eval_poly(wls_solve(f, w, d), xs)
            assert np.abs(got - want).max() <= 1e-10 * max(1.0, np.abs(f).max())

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            masks_d1_closed_form(np.array([1.0, -1.0, 1.0, 1.0]), "even")


class TestConstantWeightMask:
    def test_d1_values(self):
        mask = constant_weight_mask(scheme_from_width(4, 1))
        np.testing.assert_allclose(mask[0], [0.325, 0.275, 0.225, 0.175], atol=1e-14)

    def test_rows_sum_to_one(self):
        for width, d in ((4, 1), (6, 2), (10, 3), (5, 1), (7, 2), (11, 3)):
            mask = constant_weight_mask(scheme_from_width(width, d))
            np.testing.assert_allclose(mask.sum(axis=1), 1.0, atol=1e-12)

    def test_odd_mask_symmetry(self):
        mask = constant_weight_mask(scheme_from_width(5, 1))
        np.testing.assert_allclose(mask[0], mask[1][::-1], atol=1e-14)

    def test_matches_impulse_oracle(self):
        spec = scheme_from_width(6, 2)
        xs = abscissae("even", 2)
        mask = constant_weight_mask(spec)
        for j in range(6):
            impulse = np.zeros(6)
            impulse[j] = 1.0
            beta = oracle.brute_ls(impulse, np.ones(6), 2)
            np.testing.assert_allclose(mask[:, j], eval_poly(beta, xs), atol=1e-12)

    def test_constant_weight_scheme_is_linear(self):
        rng = np.random.default_rng(31)
        spec = scheme_from_width(6, 2, max_iters=0)
        a = rng.uniform(-5, 5, 20)
        b = rng.uniform(-5, 5, 20)
        ra = refine_once(ControlPolygon(a), spec).points
        rb = refine_once(ControlPolygon(b), spec).points
        rab = refine_once(ControlPolygon(a + b), spec).points
        assert np.abs(rab - (ra + rb)).max() <= 1e-12 * max(1.0, np.abs(rab).max())
