"""Tests for the dense self-adjoint kernel."""

import numpy as np
import pytest

from loewner import (
    CommutationError,
    Contraction,
    DimensionMismatch,
    MatrixTuple,
    NotPositiveSemidefinite,
    SymMatrix,
    apply_scalar_function,
    loewner_leq,
    make_dominated_pair,
    pinv_psd,
    psd_sqrt,
    random_commuting_tuple,
    random_contraction,
    random_isometry,
    random_pd,
    sym_eig,
    unitary_dilation,
)
from loewner.numlin import operator_norm, tuple_compress, tuple_direct_sum


class TestSymMatrix:
    def test_symmetrized_at_construction(self):
        a = SymMatrix(np.array([[1.0, 2.0], [0.0, 3.0]]))
        np.testing.assert_array_equal(a.entries, a.entries.T)
        assert a.entries[0, 1] == 1.0

    def test_hermitian_complex(self):
        a = SymMatrix(np.array([[1.0, 1j], [0.0, 2.0]]))
        np.testing.assert_allclose(a.entries, a.entries.conj().T)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            SymMatrix(np.zeros((2, 3)))


class TestSymEig:
    def test_diagonal(self):
        vals, basis = sym_eig(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(vals, [1.0, 3.0])
        # basis is a permutation up to sign
        np.testing.assert_allclose(np.abs(basis), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)

    def test_identity(self):
        vals, _ = sym_eig(np.eye(4))
        np.testing.assert_allclose(vals, np.ones(4))

    def test_construct_then_decompose_roundtrip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            d = np.sort(rng.uniform(-3, 5, n))
            g = rng.standard_normal((n, n))
            q, _ = np.linalg.qr(g)
            a = q @ np.diag(d) @ q.T
            vals, basis = sym_eig(a)
            np.testing.assert_allclose(vals, d, atol=1e-10)
            scale = max(1.0, operator_norm(a))
            assert operator_norm(basis @ np.diag(vals) @ basis.T - a) <= 1e-12 * scale
            assert operator_norm(basis.T @ basis - np.eye(n)) <= 1e-12


class TestLoewnerLeq:
    def test_scalar_order(self):
        assert loewner_leq(np.eye(3), 2 * np.eye(3), 1e-10)

    def test_reflexive(self):
        a = random_pd(4, (0.1, 10), 5)
        assert loewner_leq(a, a)

    def test_incomparable_both_ways(self):
        a, b = np.diag([2.0, 0.0]), np.diag([1.0, 1.0])
        assert not loewner_leq(a, b)
        assert not loewner_leq(b, a)

    def test_antisymmetry_within_tolerance(self):
        a = random_pd(3, (1, 2), 9).entries
        b = a + 1e-12 * np.eye(3)
        assert loewner_leq(a, b) and loewner_leq(b, a)
        assert operator_norm(a - b) <= 2e-9 * max(1.0, operator_norm(a))

    def test_transitive_on_random_triples(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            a = random_pd(4, (0.5, 3), rng).entries
            b = a + random_pd(4, (0.01, 1), rng).entries
            c = b + random_pd(4, (0.01, 1), rng).entries
            assert loewner_leq(a, b) and loewner_leq(b, c)
            assert loewner_leq(a, c, tol=2e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            loewner_leq(np.eye(2), np.eye(3))


class TestApplyScalarFunction:
    def test_identity_function(self):
        a = random_pd(5, (0.1, 10), 1)
        out = apply_scalar_function(lambda x: x, a)
        np.testing.assert_allclose(out.entries, a.entries, atol=1e-12 * a.norm)

    def test_sum_on_shared_eigenbasis(self):
        x = MatrixTuple((np.diag([1.0, 2.0]), np.diag([3.0, 4.0])), commuting=True)
        out = apply_scalar_function(lambda a, b: a + b, x)
        np.testing.assert_allclose(out.entries, np.diag([4.0, 6.0]), atol=1e-12)

    def test_sqrt_matches_psd_sqrt(self):
        # two independent code paths
        for seed in range(10):
            a = random_pd(6, (0.05, 8), seed)
            via_calculus = apply_scalar_function(np.sqrt, a)
            via_kernel = psd_sqrt(a)
            assert operator_norm(via_calculus.entries - via_kernel.entries) <= 1e-10 * a.norm

    def test_composition_through_shared_basis(self):
        for seed in range(5):
            x = random_commuting_tuple(2, 5, (0.2, 4), seed)
            inner = apply_scalar_function(lambda a, b: a * b + 1.0, x)
            composed = apply_scalar_function(lambda a, b: np.sqrt(a * b + 1.0), x)
            outer = apply_scalar_function(np.sqrt, inner)
            scale = max(1.0, inner.norm)
            assert operator_norm(composed.entries - outer.entries) <= 1e-9 * scale

    def test_rejects_noncommuting(self):
        a = random_pd(4, (0.5, 2), 3).entries
        b = random_pd(4, (0.5, 2), 4).entries
        x = MatrixTuple((a, b))  # no commuting flag; joint diagonalization must fail
        with pytest.raises(CommutationError):
            apply_scalar_function(lambda u, v: u + v, x)

    def test_undefined_at_eigenvalue(self):
        a = np.diag([1.0, 4.0])
        with pytest.raises(ValueError, match="undefined"):
            apply_scalar_function(lambda x: np.sqrt(x - 2.0), a)


class TestPsdSqrtPinv:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3)).entries, np.eye(3))
        np.testing.assert_allclose(pinv_psd(np.eye(3)).entries, np.eye(3))

    def test_diagonal_singular(self):
        a = np.diag([4.0, 0.0])
        np.testing.assert_allclose(psd_sqrt(a).entries, np.diag([2.0, 0.0]), atol=1e-14)
        np.testing.assert_allclose(pinv_psd(a).entries, np.diag([0.25, 0.0]), atol=1e-14)

    def test_roundtrip(self):
        for seed in range(8):
            a = random_pd(5, (0.01, 5), seed)
            root = psd_sqrt(a)
            assert operator_norm(root.entries @ root.entries - a.entries) <= 1e-10 * max(1, a.norm)
            inv = pinv_psd(a)
            assert operator_norm(a.entries @ inv.entries - np.eye(5)) <= 1e-8

    def test_rejects_negative(self):
        with pytest.raises(NotPositiveSemidefinite):
            psd_sqrt(np.diag([1.0, -0.5]))
        with pytest.raises(NotPositiveSemidefinite):
            pinv_psd(np.diag([1.0, -0.5]))


class TestUnitaryDilation:
    def test_identity_contraction(self):
        u = unitary_dilation(np.eye(3))
        expected = np.block([[np.eye(3), np.zeros((3, 3))],
                             [np.zeros((3, 3)), -np.eye(3)]])
        np.testing.assert_allclose(u, expected, atol=1e-12)

    def test_scalar_half(self):
        u = unitary_dilation(np.array([[0.5]]))
        expected = np.array([[0.5, np.sqrt(0.75)], [np.sqrt(0.75), -0.5]])
        np.testing.assert_allclose(u, expected, atol=1e-14)

    def test_random_isometry_dilates_to_unitary(self):
        w = random_isometry(2, 4, 11)
        u = unitary_dilation(w)
        assert u.shape == (6, 6)
        assert operator_norm(u.T @ u - np.eye(6)) <= 1e-10

    def test_unitarity_over_1000_seeds(self):
        for seed in range(1000):
            w = random_contraction(2, 3, seed) if seed % 2 else random_isometry(2, 4, seed)
            u = unitary_dilation(w)
            dim = sum(w.entries.shape)
            assert operator_norm(u.T @ u - np.eye(dim)) <= 1e-10
            assert operator_norm(u @ u.T - np.eye(dim)) <= 1e-10

    def test_rejects_expansion(self):
        with pytest.raises(ValueError):
            unitary_dilation(np.array([[1.5]]))


class TestRandomGenerators:
    def test_commuting_tuple_is_commuting(self):
        x = random_commuting_tuple(3, 6, (0.1, 10), 42)
        scale = max(xi.norm for xi in x.items) ** 2
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = x.items[i].entries, x.items[j].entries
                assert operator_norm(a @ b - b @ a) <= 1e-12 * scale

    def test_k1_reduces_to_random_pd(self):
        x = random_commuting_tuple(1, 4, (0.5, 2), 7)
        assert np.linalg.eigvalsh(x.items[0].entries)[0] > 0.4

    def test_seed_reproducibility_bit_identical(self):
        x1 = random_commuting_tuple(2, 5, (0.1, 10), 123)
        x2 = random_commuting_tuple(2, 5, (0.1, 10), 123)
        for a, b in zip(x1.items, x2.items):
            assert np.array_equal(a.entries, b.entries)
        assert np.array_equal(random_pd(4, (1, 2), 9).entries,
                              random_pd(4, (1, 2), 9).entries)

    def test_spectrum_inside_interval(self):
        x = random_commuting_tuple(2, 5, (0.3, 0.9), 5)
        for xi in x.items:
            vals = np.linalg.eigvalsh(xi.entries)
            assert vals[0] >= 0.3 - 1e-12 and vals[-1] <= 0.9 + 1e-12

    def test_isometry_gram(self):
        w = random_isometry(3, 7, 17)
        assert operator_norm(w.entries.T @ w.entries - np.eye(3)) <= 1e-12
        assert w.is_isometry

    def test_isometry_needs_taller_target(self):
        with pytest.raises(ValueError):
            random_isometry(5, 3, 0)

    def test_contraction_norm(self):
        for seed in range(20):
            w = random_contraction(3, 5, seed)
            assert operator_norm(w.entries) <= 1.0 + 1e-12

    def test_contraction_type_rejects_large(self):
        with pytest.raises(ValueError):
            Contraction(2.0 * np.eye(2))


class TestMakeDominatedPair:
    def test_equal_tuples_shift_by_margin(self):
        x = random_commuting_tuple(2, 4, (1.0, 3.0), 3)
        xd, y = make_dominated_pair(x, x, margin=0.05)
        for a, b in zip(xd.items, x.items):
            np.testing.assert_allclose(a.entries, b.entries - 0.05 * np.eye(4), atol=1e-14)
        for a, b in zip(y.items, x.items):
            np.testing.assert_array_equal(a.entries, b.entries)

    def test_scalar_case(self):
        x = MatrixTuple((np.array([[3.0]]),))
        y = MatrixTuple((np.array([[1.0]]),))
        xd, yd = make_dominated_pair(x, y, margin=0.05)
        assert abs(xd.items[0].entries[0, 0] - 0.95) < 1e-14
        assert abs(yd.items[0].entries[0, 0] - 1.0) < 1e-14

    def test_order_holds_coordinatewise(self):
        rng = np.random.default_rng(8)
        for trial in range(30):
            k = int(rng.integers(1, 4))
            n = int(rng.integers(2, 6))
            x = MatrixTuple(tuple(random_pd(n, (0.1, 10), rng) for _ in range(k)))
            y = MatrixTuple(tuple(random_pd(n, (0.1, 10), rng) for _ in range(k)))
            xd, yd = make_dominated_pair(x, y, margin=0.05)
            for a, b in zip(xd.items, yd.items):
                assert loewner_leq(a, b)
                assert np.linalg.eigvalsh(a.entries)[0] > 0
                diff_max = np.linalg.eigvalsh(b.entries - a.entries)[-1]
                assert np.linalg.eigvalsh(b.entries - a.entries)[0] >= 0.05 - 1e-10 or diff_max > 0

    def test_commuting_flag_preserved(self):
        x = random_commuting_tuple(2, 4, (0.5, 2), 1)
        y = random_commuting_tuple(2, 4, (0.5, 2), 2)
        xd, _ = make_dominated_pair(x, y)
        assert xd.commuting


class TestStructuralHelpers:
    def test_tuple_direct_sum(self):
        x = MatrixTuple((np.eye(2),))
        y = MatrixTuple((2 * np.eye(3),))
        s = tuple_direct_sum(x, y)
        np.testing.assert_allclose(s.items[0].entries,
                                   np.diag([1.0, 1.0, 2.0, 2.0, 2.0]))

    def test_tuple_compress(self):
        x = MatrixTuple((np.diag([1.0, 2.0, 3.0]),))
        v = np.zeros((3, 2))
        v[0, 0] = 1.0
        v[2, 1] = 1.0
        c = tuple_compress(x, v)
        np.testing.assert_allclose(c.items[0].entries, np.diag([1.0, 3.0]))
