from __future__ import annotations

import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from skewtorsion.catalog import cross_product_form
from skewtorsion.errors import ContractViolation, DimensionMismatch
from skewtorsion.exterior import (
    FourForm,
    ThreeForm,
    action_matrix,
    derived_form,
    derived_operators,
    pullback,
    so_action,
    theta_operator,
)
from skewtorsion.numerics import expm_skew

from conftest import random_orthogonal, random_skew


def _perm_parity(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


class TestStorage:
    def test_coefficient_count(self):
        assert ThreeForm.zero(6).coeffs.shape == (comb(6, 3),)
        assert FourForm.zero(6).coeffs.shape == (comb(6, 4),)

    def test_entries_roundtrip(self, rng):
        T = ThreeForm.random(5, rng)
        U = ThreeForm.from_entries(5, T.to_entries())
        assert_allclose(U.coeffs, T.coeffs)

    def test_entries_must_increase(self):
        with pytest.raises(ContractViolation):
            ThreeForm.from_entries(3, [[1, 0, 2, 1.0]])
        with pytest.raises(ContractViolation):
            ThreeForm.from_entries(3, [[0, 1, 3, 1.0]])

    def test_antisymmetry_exhaustive(self, rng):
        T = ThreeForm.random(4, rng)
        for i, j, k in itertools.product(range(4), repeat=3):
            v = T.evaluate(i, j, k)
            if len({i, j, k}) < 3:
                assert v == 0.0
                continue
            order = sorted((i, j, k))
            base = T.evaluate(*order)
            perm = [order.index(x) for x in (i, j, k)]
            assert v == pytest.approx(_perm_parity(perm) * base)

    def test_from_dense_rejects_nonalternating(self):
        arr = np.zeros((3, 3, 3))
        arr[0, 1, 2] = 1.0
        with pytest.raises(ContractViolation):
            ThreeForm.from_dense(arr)

    def test_multilinear_call(self, rng):
        T = ThreeForm.random(4, rng)
        x, y, z = rng.standard_normal((3, 4))
        assert T(x, y, z) == pytest.approx(np.einsum("ijk,i,j,k", T.dense, x, y, z))


class TestThetaOperator:
    def test_cross_product(self):
        T = cross_product_form()
        M = theta_operator(T, np.array([1.0, 0, 0]))
        assert_allclose(M @ [0, 1.0, 0], [0, 0, 1.0])
        assert_allclose(M @ [0, 0, 1.0], [0, -1.0, 0])

    def test_cross_product_matches_numpy(self, rng):
        T = cross_product_form()
        x, y = rng.standard_normal((2, 3))
        assert_allclose(theta_operator(T, x) @ y, np.cross(x, y), atol=1e-12)

    def test_annihilates_argument_and_is_skew(self, rng):
        T = ThreeForm.random(6, rng)
        x = rng.standard_normal(6)
        M = theta_operator(T, x)
        assert_allclose(M, -M.T, atol=1e-14)
        assert_allclose(M @ x, 0, atol=1e-12)

    def test_entry_convention(self, rng):
        T = ThreeForm.random(5, rng)
        x = rng.standard_normal(5)
        M = theta_operator(T, x)
        e = np.eye(5)
        for j, k in itertools.product(range(5), repeat=2):
            assert M[k, j] == pytest.approx(T(x, e[j], e[k]), abs=1e-12)

    def test_transposition_sign(self, rng):
        T = ThreeForm.random(5, rng)
        x, y, z = rng.standard_normal((3, 5))
        val = theta_operator(T, x) @ y @ z
        assert theta_operator(T, y) @ x @ z == pytest.approx(-val)
        assert theta_operator(T, x) @ z @ y == pytest.approx(-val)
        assert theta_operator(T, z) @ y @ x == pytest.approx(-val)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            theta_operator(ThreeForm.zero(4), np.ones(3))

    def test_injective(self):
        # the map T -> (Theta_{e_i}) is injective: the operators recover every coefficient
        n = 5
        for B in ThreeForm.basis(n):
            assert np.abs(B.operators()).max() > 0.5

    def test_linear_in_vector(self, rng):
        T = ThreeForm.random(4, rng)
        x, y = rng.standard_normal((2, 4))
        assert_allclose(theta_operator(T, 2 * x - y), 2 * theta_operator(T, x) - theta_operator(T, y), atol=1e-12)


class TestSoAction:
    def test_zero_generator(self, rng):
        T = ThreeForm.random(5, rng)
        assert np.abs(so_action(np.zeros((5, 5)), T).coeffs).max() == 0.0

    def test_formula_by_direct_evaluation(self, rng):
        n = 5
        T = ThreeForm.random(n, rng)
        B = random_skew(rng, n)
        U = so_action(B, T)
        x, y, z = rng.standard_normal((3, n))
        th = lambda v: theta_operator(T, v)  # noqa: E731
        expected = (B @ th(x) @ y - th(x) @ B @ y - th(B @ x) @ y) @ z
        assert U(x, y, z) == pytest.approx(expected, abs=1e-10)

    def test_cross_form_invariant_under_so3(self, rng):
        T = cross_product_form()
        z = rng.standard_normal(3)
        assert np.abs(so_action(theta_operator(T, z), T).coeffs).max() <= 1e-12

    def test_rejects_nonskew(self):
        with pytest.raises(ContractViolation):
            so_action(np.eye(3), cross_product_form())

    def test_bilinear(self, rng):
        T1, T2 = ThreeForm.random(4, rng), ThreeForm.random(4, rng)
        B1, B2 = random_skew(rng, 4), random_skew(rng, 4)
        lhs = so_action(2 * B1 + B2, T1 - 3 * T2)
        rhs = so_action(B1, T1) * 2 + so_action(B2, T1) - so_action(B1, T2) * 6 - so_action(B2, T2) * 3
        assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)

    def test_action_matrix_agrees(self, rng):
        T = ThreeForm.random(5, rng)
        B = random_skew(rng, 5)
        assert_allclose(action_matrix(B, 5) @ T.coeffs, so_action(B, T).coeffs, atol=1e-12)

    def test_four_form_overload(self, rng):
        F = FourForm.random(5, rng)
        B = random_skew(rng, 5)
        U = so_action(B, F)
        assert isinstance(U, FourForm)
        assert_allclose(action_matrix(B, 5, degree=4) @ F.coeffs, U.coeffs, atol=1e-12)


class TestPullback:
    def test_identity(self, rng):
        T = ThreeForm.random(5, rng)
        assert_allclose(pullback(np.eye(5), T).coeffs, T.coeffs)

    def test_conjugation_identity(self, rng):
        T = ThreeForm.random(5, rng)
        g = random_orthogonal(rng, 5)
        U = pullback(g, T)
        for v in np.eye(5):
            assert_allclose(theta_operator(U, v), g.T @ theta_operator(T, g @ v) @ g, atol=1e-12)

    def test_finite_difference_is_minus_so_action(self, rng):
        T = ThreeForm.random(5, rng)
        B = random_skew(rng, 5)
        for t in (1e-3, 1e-4):
            fd = (pullback(expm_skew(t * B), T).coeffs - T.coeffs) / t
            err = np.abs(fd + so_action(B, T).coeffs).max()
            assert err <= 50 * t * np.abs(B).max() ** 2

    def test_composition(self, rng):
        T = ThreeForm.random(4, rng)
        g, h = random_orthogonal(rng, 4), random_orthogonal(rng, 4)
        assert_allclose(pullback(g, pullback(h, T)).coeffs, pullback(h @ g, T).coeffs, atol=1e-12)

    def test_rejects_nonorthogonal(self):
        with pytest.raises(ContractViolation):
            pullback(2 * np.eye(3), cross_product_form())

    @settings(max_examples=25, deadline=None)
    @given(st.integers(3, 7), st.integers(0, 2**31 - 1))
    def test_norm_preserved(self, n, seed):
        rng = np.random.default_rng(seed)
        T = ThreeForm.random(n, rng)
        g = random_orthogonal(rng, n)
        assert abs(pullback(g, T).norm() - T.norm()) <= 10 * 1e-9


class TestDerivedForm:
    def test_cross_product_satisfies_jacobi(self):
        # no 4-forms live on R^3, so check the operator-valued version
        assert derived_form(cross_product_form()).coeffs.size == 0
        assert np.abs(derived_operators(cross_product_form())).max() <= 1e-14

    def test_is_alternating(self, rng):
        # Omega is totally skew for every 3-form, not only Jacobi ones
        T = ThreeForm.random(6, rng)
        assert isinstance(derived_form(T), FourForm)

    def test_components_by_hand(self, rng):
        T = ThreeForm.random(5, rng)
        Om = derived_form(T)
        x, y, z, w = rng.standard_normal((4, 5))
        th = lambda v: theta_operator(T, v)  # noqa: E731
        direct = ((th(x) @ th(y) - th(y) @ th(x) - th(th(x) @ y)) @ z) @ w
        assert Om(x, y, z, w) == pytest.approx(direct, abs=1e-10)
