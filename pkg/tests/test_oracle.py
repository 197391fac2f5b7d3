"""Cross-checks between the library paths and the independent oracle code."""

import numpy as np
import pytest

from l1subdiv import oracle
from l1subdiv.local_fit import FitConfig, eval_poly, irls_fit, objective_value, ols_init, wls_solve


def random_config(rng, max_n=3, **kwargs):
    n = int(rng.integers(2, max_n + 1))
    d = int(rng.integers(1, 4))
    parity = ("even", "odd")[int(rng.integers(0, 2))]
    return FitConfig(d=d, parity=parity, n=n, **kwargs)


class TestGaussSolve:
    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        for size in (2, 3, 4, 6):
            for _ in range(20):
                m = rng.uniform(-5, 5, (size, size))
                m = m @ m.T + size * np.eye(size)
                b = rng.uniform(-5, 5, size)
                np.testing.assert_allclose(
                    oracle.gauss_solve(m, b), np.linalg.solve(m, b), rtol=1e-9, atol=1e-11
                )

    def test_singular_raises(self):
        with pytest.raises(ZeroDivisionError):
            oracle.gauss_solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


class TestBruteLs:
    def test_exact_line(self):
        beta = oracle.brute_ls(np.array([-1.0, 0.0, 1.0, 2.0]), np.ones(4), 1)
        np.testing.assert_allclose(beta, [0.0, 1.0], atol=1e-13)

    def test_exact_cubic(self):
        r = np.arange(-1.0, 3.0)
        beta = oracle.brute_ls(r**3, np.ones(4), 3)
        np.testing.assert_allclose(beta, [0.0, 0.0, 0.0, 1.0], atol=1e-10)

    def test_cross_implementation_agreement(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            cfg = random_config(rng)
            f = rng.uniform(-10, 10, cfg.stencil_size)
            w = rng.uniform(0.01, 10, cfg.stencil_size)
            a = wls_solve(f, w, cfg.d)
            b = oracle.brute_ls(f, w, cfg.d)
            assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(b).max())


class TestGradient:
    def test_zero_at_exact_fit(self):
        cfg = FitConfig(d=2, parity="odd", n=3)
        coeffs = np.array([1.0, -2.0, 0.5])
        f = eval_poly(coeffs, cfg.offsets())
        g = oracle.objective_gradient(f, coeffs, 1e-4)
        np.testing.assert_allclose(g, 0.0, atol=1e-12)

    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(60):
            cfg = random_config(rng)
            f = rng.uniform(-10, 10, cfg.stencil_size)
            beta = rng.uniform(-3, 3, cfg.d + 1)
            g = oracle.objective_gradient(f, beta, 1e-4)
            for a in range(cfg.d + 1):
                e = np.zeros(cfg.d + 1)
                e[a] = h
                fd = (
                    objective_value(f, beta + e, 1e-4)
                    - objective_value(f, beta - e, 1e-4)
                ) / (2 * h)
                assert abs(g[a] - fd) <= 1e-6 * (1.0 + abs(fd))

    def test_small_at_converged_fit(self):
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(200):
            cfg = random_config(rng, max_n=2, epsilon=1e-8, max_iters=300)
            f = rng.uniform(-10, 10, cfg.stencil_size)
            res = irls_fit(f, cfg)
            if not res.converged:
                continue
            checked += 1
            g = oracle.objective_gradient(f, res.beta, cfg.delta)
            scale = max(1.0, np.abs(f).max())
            assert np.abs(g).max() <= 1e2 * cfg.epsilon * scale
        assert checked >= 100


class TestMinimize:
    def test_polynomial_data(self):
        cfg = FitConfig(d=2, parity="even", n=3)
        f = eval_poly(np.array([1.0, 2.0, -0.5]), cfg.offsets())
        beta = oracle.minimize_objective(f, cfg)
        np.testing.assert_allclose(beta, ols_init(f, cfg), atol=1e-8)

    def test_outlier_stencil_reaches_lad_line(self):
        f = np.array([-2.0, -1.0, 0.0, 1.0, 10.0])
        cfg = FitConfig(d=1, parity="odd", n=2, delta=1e-6)
        beta = oracle.minimize_objective(f, cfg)
        np.testing.assert_allclose(beta, [0.0, 1.0], atol=1e-2)

    def test_agreement_with_irls(self):
        rng = np.random.default_rng(5)
        compared = 0
        for delta in (1e-2, 1e-4, 1e-6):
            for _ in range(80):
                cfg = random_config(rng, delta=delta, epsilon=1e-10, max_iters=500)
                f = rng.uniform(-10, 10, cfg.stencil_size)
                res = irls_fit(f, cfg)
                if not res.converged:
                    continue
                direct = oracle.minimize_objective(f, cfg)
                assert np.abs(direct - res.beta).max() <= 1e-6
                compared += 1
        assert compared >= 150

    def test_lad_limit(self):
        # smoothing delta -> 0 converges to the enumerated deviation line
        f = np.array([-2.0, -1.0, 0.0, 1.0, 10.0])
        exact = oracle.lad_line_exact(f)
        scale = np.abs(f).max()
        for delta in (1e-2, 1e-4, 1e-6):
            cfg = FitConfig(d=1, parity="odd", n=2, delta=delta)
            beta = oracle.minimize_objective(f, cfg)
            assert np.abs(beta - exact).max() <= 10 * np.sqrt(delta) * scale


class TestLadLine:
    def test_collinear(self):
        f = 2.0 - 3.0 * np.arange(-2.0, 3.0)
        beta = oracle.lad_line_exact(f)
        np.testing.assert_allclose(beta, [2.0, -3.0], atol=1e-12)
        r = np.arange(-2.0, 3.0)
        assert np.abs(f - (beta[0] + beta[1] * r)).sum() == pytest.approx(0.0, abs=1e-12)

    def test_outlier_example(self):
        # four points with one outlier: several pair lines tie at total
        # deviation 8; the tie-break (smallest slope, then intercept) picks
        # the identity line
        f = np.array([-1.0, 0.0, 1.0, 10.0])
        beta = oracle.lad_line_exact(f)
        np.testing.assert_allclose(beta, [0.0, 1.0], atol=1e-14)
        r = np.arange(-1.0, 3.0)
        assert np.abs(f - (beta[0] + beta[1] * r)).sum() == pytest.approx(8.0)

    def test_translation(self):
        rng = np.random.default_rng(6)
        f = rng.uniform(-5, 5, 7)
        base = oracle.lad_line_exact(f)
        shifted = oracle.lad_line_exact(f + 3.25)
        assert shifted[1] == pytest.approx(base[1], abs=1e-12)
        assert shifted[0] == pytest.approx(base[0] + 3.25, abs=1e-12)

    def test_degenerate_abscissae(self):
        with pytest.raises(ValueError):
            oracle.lad_line_exact(np.array([1.0, 2.0]), x=np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            oracle.lad_line_exact(np.array([1.0]))

    def test_2d_brute_matches_generic(self):
        from l1subdiv.local_fit import design_matrix_2d

        rng = np.random.default_rng(7)
        for parity, n, d in (("even", 2, 2), ("odd", 2, 1), ("even", 3, 2)):
            cfg = FitConfig(d=d, parity=parity, n=n)
            size = cfg.stencil_size
            f = rng.uniform(-5, 5, (size, size))
            w = rng.uniform(0.1, 5, (size, size))
            b = oracle.brute_ls_2d(f, w, d)
            X = design_matrix_2d(cfg.offsets(), d)
            wf = w.reshape(-1)
            m = (X * wf[:, None]).T @ X
            rhs = X.T @ (wf * f.reshape(-1))
            np.testing.assert_allclose(b, np.linalg.solve(m, rhs), rtol=1e-9, atol=1e-10)
