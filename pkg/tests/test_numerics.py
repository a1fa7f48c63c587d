import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from symradio.numerics import (
    DomainError,
    NumericError,
    ValidationError,
    as_hermitian,
    bessel_I0,
    bessel_I0e,
    expint_E1,
    expint_Ei,
    herm_eig,
    logdet_pd,
    solve_hermitian_pd,
)

from conftest import random_hermitian, random_pd
from oracles import ei_quad, i0_series


class TestHermEig:
    def test_identity(self):
        lam, V = herm_eig(np.eye(3))
        np.testing.assert_allclose(lam, 1.0)
        np.testing.assert_allclose(V.conj().T @ V, np.eye(3), atol=1e-12)

    def test_rank_one(self, rng):
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x *= math.sqrt(5) / np.linalg.norm(x)
        lam, V = herm_eig(np.outer(x, x.conj()))
        np.testing.assert_allclose(lam, [0, 0, 0, 5], atol=1e-12)
        assert abs(abs(np.vdot(V[:, -1], x / np.linalg.norm(x))) - 1) < 1e-12

    def test_reconstruction_many(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            A = random_hermitian(rng, n)
            lam, V = herm_eig(A)
            assert np.all(np.diff(lam) >= 0)
            err = np.linalg.norm(V @ np.diag(lam) @ V.conj().T - A)
            assert err <= 1e-9 * max(np.linalg.norm(A), 1e-300)
            np.testing.assert_allclose(V.conj().T @ V, np.eye(n), atol=1e-9)

    def test_eigenpairs(self, rng):
        A = random_hermitian(rng, 6)
        lam, V = herm_eig(A)
        for i in range(6):
            assert np.linalg.norm(A @ V[:, i] - lam[i] * V[:, i]) <= 1e-9 * np.linalg.norm(A, 2)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            herm_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_tolerance_scales_with_magnitude(self):
        A = np.array([[1e-12, 1e-12], [1e-12 + 1e-25, 2e-12]])
        as_hermitian(A)

    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            as_hermitian(np.array([[np.nan]]))


class TestLinearSolve:
    def test_scaled_identity(self, rng):
        b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        np.testing.assert_allclose(solve_hermitian_pd(0.25 * np.eye(4), b), b / 0.25)

    def test_sherman_morrison(self, rng):
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        x = solve_hermitian_pd(np.eye(4) + np.outer(g, g.conj()), g)
        np.testing.assert_allclose(x, g / (1 + np.vdot(g, g).real), rtol=1e-12)

    def test_random_pd_vs_eig_inverse(self, rng):
        for _ in range(50):
            A = random_pd(rng, 4)
            b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            x = solve_hermitian_pd(A, b)
            lam, V = np.linalg.eigh(A)
            ref = V @ ((V.conj().T @ b) / lam)
            assert np.linalg.norm(A @ x - b) <= 1e-9 * np.linalg.norm(b)
            np.testing.assert_allclose(x, ref, rtol=1e-9, atol=1e-12)

    def test_indefinite_names_eigenvalue(self):
        with pytest.raises(NumericError, match="smallest eigenvalue"):
            solve_hermitian_pd(np.diag([1.0, -2.0]), np.ones(2))


class TestLogdet:
    def test_identity(self):
        assert logdet_pd(np.eye(5)) == 0.0

    def test_rank_one_reduction(self, rng):
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        c = 3.7
        val = logdet_pd(np.eye(4) + c * np.outer(g, g.conj()))
        assert val == pytest.approx(math.log2(1 + c * np.vdot(g, g).real), rel=1e-12)

    def test_matches_eigen_product(self, rng):
        A = random_pd(rng, 4)
        assert logdet_pd(A) == pytest.approx(np.sum(np.log2(np.linalg.eigvalsh(A))), rel=1e-12)

    @given(st.floats(1e-3, 1e3), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
    def test_scaling(self, c, n, seed):
        A = random_pd(np.random.default_rng(seed), n)
        assert logdet_pd(c * A) == pytest.approx(logdet_pd(A) + n * math.log2(c), abs=1e-9)

    def test_non_pd(self):
        with pytest.raises(NumericError):
            logdet_pd(np.zeros((2, 2)))


class TestEi:
    def test_reference_values(self):
        assert expint_Ei(-1.0) == pytest.approx(-0.2193839343, abs=1e-10)
        assert expint_Ei(-0.1) == pytest.approx(-1.8229239585, abs=1e-10)

    def test_far_tail(self):
        assert abs(expint_Ei(-1e6)) < 1e-10
        assert expint_Ei(-math.inf) == 0.0

    @pytest.mark.parametrize("x", [0.0, 1.0, math.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            expint_Ei(x)

    def test_against_quadrature(self):
        for a in np.logspace(-4, math.log10(50), 50):
            assert abs(expint_Ei(-a) - ei_quad(-a)) <= 1e-10

    def test_switch_point_continuity(self):
        from symradio.numerics import _e1_continued_fraction, _ei_negative_series
        for a in (5.5, 6.0, 6.5):
            assert abs(_ei_negative_series(-a) + _e1_continued_fraction(a)) < 1e-12

    @given(st.floats(1e-6, 700), st.floats(1e-6, 700))
    def test_negative_and_decreasing(self, a, b):
        # Ei'(x) = e^x / x < 0 on the negative axis, so Ei falls towards -inf at 0-
        x1, x2 = -max(a, b), -min(a, b)
        e1, e2 = expint_Ei(x1), expint_Ei(x2)
        assert e1 < 0 and e2 < 0
        if x1 < x2:
            assert e1 >= e2

    def test_e1_identity(self):
        assert expint_E1(2.5) == -expint_Ei(-2.5)

    def test_matches_mpmath(self):
        for a in np.logspace(-6, 2.8, 80):
            ref = float(mpmath.ei(-a))
            assert expint_Ei(-a) == pytest.approx(ref, rel=1e-12, abs=1e-300)


class TestBessel:
    def test_zero(self):
        assert bessel_I0(0.0) == 1.0

    def test_reference_values(self):
        assert bessel_I0(1.0) == pytest.approx(1.2660658778, abs=1e-10)
        assert bessel_I0(10.0) == pytest.approx(2815.7166284, rel=1e-10)

    def test_against_series(self):
        for x in np.linspace(0, 50, 101):
            assert bessel_I0(x) == pytest.approx(i0_series(x), rel=1e-10)

    def test_negative(self):
        with pytest.raises(DomainError):
            bessel_I0(-1.0)

    @given(st.floats(0, 700))
    def test_scaled_consistent(self, x):
        ref = float(mpmath.besseli(0, x) * mpmath.exp(-x))
        assert bessel_I0e(x) == pytest.approx(ref, rel=1e-12)

    def test_scaled_large_argument(self):
        for x in (1e3, 1e5, 1e8):
            ref = float(mpmath.besseli(0, x) * mpmath.exp(-x))
            assert bessel_I0e(x) == pytest.approx(ref, rel=1e-13)
