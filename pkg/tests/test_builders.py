"""Tests for the realization factory."""

import numpy as np
import pytest

from loewner import (
    FunctionSpec,
    MatrixTuple,
    QuadratureScheme,
    apply_scalar_function,
    arrowhead_sum,
    b_form,
    build_realization,
    cauchy_atom,
    eval_pencil,
    geometric_mean,
    loewner_quadrature,
    psd_sqrt,
    random_pd,
    weighted_arithmetic,
    weighted_harmonic,
)
from loewner.builders import power_quadrature_scheme
from loewner.numlin import operator_norm


def geo_oracle(a, b, t):
    """A^(1/2) (A^(-1/2) B A^(-1/2))^t A^(1/2) by eigendecomposition."""
    a = np.asarray(a)
    b = np.asarray(b)
    lam, u = np.linalg.eigh(a)
    ah = (u * np.sqrt(lam)) @ u.T
    ahi = (u / np.sqrt(lam)) @ u.T
    lam2, u2 = np.linalg.eigh(ahi @ b @ ahi)
    return ah @ ((u2 * lam2 ** t) @ u2.T) @ ah


class TestFunctionSpec:
    def test_parse_valid(self):
        assert FunctionSpec.parse("power:0.5").params == (0.5,)
        assert FunctionSpec.parse("harmonic:0.3,0.7").arity == 2
        assert FunctionSpec.parse("sqrt").tag == "sqrt"
        assert FunctionSpec.parse("geomean:0.25").arity == 2

    @pytest.mark.parametrize("text", [
        "power:1.5", "power:0", "cauchy:-1", "cauchy:0", "constant:-2",
        "harmonic:0.3,0.3", "arithmetic:-0.5,1.5", "unknown:1", "power:a,b",
    ])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            FunctionSpec.parse(text)

    def test_affine_in_process_only(self):
        spec = FunctionSpec("affine", (0.5, 1.0, 2.0))
        assert spec.arity == 2


class TestQuadratureScheme:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            QuadratureScheme(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            QuadratureScheme(np.array([1.0, 2.0]), np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            QuadratureScheme(np.array([0.0, 1.0]), np.array([1.0, 1.0]))

    def test_power_scheme_shape_and_signs(self):
        s = power_quadrature_scheme(0.5, 32)
        assert s.node_count == 32
        assert np.all(s.nodes > 0) and np.all(np.diff(s.nodes) > 0)
        assert np.all(s.weights > 0)

    def test_scalar_accuracy(self):
        for t in (0.25, 0.5, 0.75):
            s = power_quadrature_scheme(t, 64)
            for x in (0.1, 1.0, 7.3):
                approx = float(np.sum(s.weights * s.nodes * x / (s.nodes + x)))
                assert abs(approx - x ** t) <= 1e-9 * x ** t

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            power_quadrature_scheme(1.2, 32)
        with pytest.raises(ValueError):
            power_quadrature_scheme(0.5, 4)


class TestCauchyAtom:
    def test_scalar_half(self):
        r = cauchy_atom(1.0)
        out = eval_pencil(r, MatrixTuple((np.array([[1.0]]),)))
        assert abs(out.entries[0, 0] - 0.5) < 1e-14

    def test_saturates_at_lambda(self):
        r = cauchy_atom(3.0)
        out = eval_pencil(r, MatrixTuple((np.array([[1e6]]),)))
        assert abs(out.entries[0, 0] - 3.0) / 3.0 < 1e-5

    def test_matrix_oracle(self):
        lam = 2.5
        r = cauchy_atom(lam)
        a = random_pd(6, (0.05, 30), 3)
        got = eval_pencil(r, MatrixTuple((a,)))
        oracle = apply_scalar_function(lambda x: lam * x / (lam + x), a)
        assert operator_norm(got.entries - oracle.entries) <= 1e-10 * max(1, oracle.norm)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            cauchy_atom(0.0)


class TestArrowheadSum:
    def test_single_atom_identical_eval(self):
        atom = cauchy_atom(1.5)
        summed = arrowhead_sum([atom])
        a = random_pd(4, (0.2, 5), 1)
        f1 = eval_pencil(atom, MatrixTuple((a,))).entries
        f2 = eval_pencil(summed, MatrixTuple((a,))).entries
        assert operator_norm(f1 - f2) <= 1e-12

    def test_two_cauchy_atoms_scalar_sum(self):
        r = arrowhead_sum([cauchy_atom(1.0), cauchy_atom(2.0)])
        out = eval_pencil(r, MatrixTuple((np.array([[1.0]]),)))
        assert abs(out.entries[0, 0] - (0.5 + 2.0 / 3.0)) < 1e-13

    def test_affine_only_identity(self):
        r = arrowhead_sum([], affine=(0.0, [1.0]))
        a = random_pd(3, (0.1, 10), 2)
        np.testing.assert_allclose(eval_pencil(r, MatrixTuple((a,))).entries,
                                   a.entries, atol=1e-13)

    def test_matrix_sum_with_affine(self):
        r = arrowhead_sum([cauchy_atom(1.0)], affine=(0.5, [0.25]))
        a = random_pd(3, (0.2, 4), 7)
        got = eval_pencil(r, MatrixTuple((a,))).entries
        oracle = (0.5 * np.eye(3) + 0.25 * a.entries
                  + apply_scalar_function(lambda x: x / (1 + x), a).entries)
        assert operator_norm(got - oracle) <= 1e-10

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            arrowhead_sum([cauchy_atom(1.0), geometric_mean(0.5, 8)])


class TestLoewnerQuadrature:
    def test_sqrt_accuracy_against_oracle(self):
        r = loewner_quadrature(0.5, 96)
        for seed in range(10):
            a = random_pd(6, (0.1, 10), seed)
            got = eval_pencil(r, MatrixTuple((a,))).entries
            oracle = psd_sqrt(a).entries
            rel = operator_norm(got - oracle) / operator_norm(oracle)
            assert rel <= 1e-6

    def test_fixed_point_of_power(self):
        r = loewner_quadrature(0.5, 64)
        out = eval_pencil(r, MatrixTuple((np.array([[1.0]]),)))
        assert abs(out.entries[0, 0] - 1.0) < 1e-10

    def test_error_decreases_with_node_doubling(self):
        fixed = [random_pd(4, (1e-3, 1e3), seed) for seed in range(10)]
        oracles = [apply_scalar_function(lambda x: x ** 0.35, a) for a in fixed]
        errs = []
        for n in (16, 32, 64, 128):
            r = loewner_quadrature(0.35, n)
            worst = 0.0
            for a, oracle in zip(fixed, oracles):
                got = eval_pencil(r, MatrixTuple((a,))).entries
                worst = max(worst, operator_norm(got - oracle.entries) / oracle.norm)
            errs.append(worst)
        assert all(errs[i + 1] <= errs[i] for i in range(len(errs) - 1))

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            loewner_quadrature(1.0, 32)


class TestWeightedHarmonic:
    def test_idempotent(self):
        r = weighted_harmonic([0.4, 0.6])
        a = random_pd(4, (0.5, 3), 5)
        out = eval_pencil(r, MatrixTuple((a, a))).entries
        assert operator_norm(out - a.entries) <= 1e-10 * a.norm

    def test_scalar_pair(self):
        r = weighted_harmonic([0.5, 0.5])
        out = eval_pencil(r, MatrixTuple((np.array([[1.0]]), np.array([[3.0]]))))
        assert abs(out.entries[0, 0] - 1.5) < 1e-12

    def test_random_vs_inverse_sum_formula(self):
        w = [0.2, 0.5, 0.3]
        r = weighted_harmonic(w)
        for seed in range(8):
            xs = [random_pd(4, (0.2, 6), 10 * seed + i) for i in range(3)]
            got = eval_pencil(r, MatrixTuple(tuple(xs))).entries
            oracle = np.linalg.inv(sum(wi * np.linalg.inv(x.entries)
                                       for wi, x in zip(w, xs)))
            assert operator_norm(got - oracle) <= 1e-10 * max(1, operator_norm(oracle))

    def test_homogeneous(self):
        r = weighted_harmonic([0.3, 0.7])
        xs = [random_pd(3, (0.5, 2), s) for s in (1, 2)]
        f1 = eval_pencil(r, MatrixTuple(tuple(xs))).entries
        f2 = eval_pencil(r, MatrixTuple(tuple(3.0 * x.entries for x in xs))).entries
        assert operator_norm(f2 - 3.0 * f1) <= 1e-9 * max(1, operator_norm(f1))

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            weighted_harmonic([0.5, 0.6])


class TestWeightedArithmetic:
    def test_exact(self):
        w = [0.25, 0.75]
        r = weighted_arithmetic(w)
        xs = [random_pd(4, (0.1, 5), s) for s in (3, 4)]
        got = eval_pencil(r, MatrixTuple(tuple(xs))).entries
        oracle = 0.25 * xs[0].entries + 0.75 * xs[1].entries
        assert operator_norm(got - oracle) <= 1e-14 * max(1, operator_norm(oracle))

    def test_idempotent(self):
        r = weighted_arithmetic([0.5, 0.5])
        a = random_pd(3, (1, 2), 0)
        np.testing.assert_allclose(eval_pencil(r, MatrixTuple((a, a))).entries,
                                   a.entries, atol=1e-14)


class TestGeometricMean:
    def test_idempotent(self):
        r = geometric_mean(0.5, 64)
        a = random_pd(4, (0.3, 3), 8)
        out = eval_pencil(r, MatrixTuple((a, a))).entries
        assert operator_norm(out - a.entries) / a.norm <= 1e-8

    def test_scalar_pair(self):
        r = geometric_mean(0.5, 128)
        out = eval_pencil(r, MatrixTuple((np.array([[1.0]]), np.array([[4.0]]))))
        assert abs(out.entries[0, 0] - 2.0) < 1e-5

    def test_random_pairs_vs_oracle(self):
        r = geometric_mean(0.5, 128)
        for seed in range(8):
            a = random_pd(4, (0.1, 10), 2 * seed)
            b = random_pd(4, (0.1, 10), 2 * seed + 1)
            got = eval_pencil(r, MatrixTuple((a, b))).entries
            oracle = geo_oracle(a.entries, b.entries, 0.5)
            assert operator_norm(got - oracle) / operator_norm(oracle) <= 1e-5

    def test_weighted_exponent(self):
        r = geometric_mean(0.25, 96)
        a = random_pd(3, (0.2, 5), 11)
        b = random_pd(3, (0.2, 5), 12)
        got = eval_pencil(r, MatrixTuple((a, b))).entries
        oracle = geo_oracle(a.entries, b.entries, 0.25)
        assert operator_norm(got - oracle) / operator_norm(oracle) <= 1e-5

    def test_homogeneous(self):
        r = geometric_mean(0.5, 64)
        a = random_pd(3, (0.5, 2), 1)
        b = random_pd(3, (0.5, 2), 2)
        f1 = eval_pencil(r, MatrixTuple((a, b))).entries
        f2 = eval_pencil(r, MatrixTuple((2.0 * a.entries, 2.0 * b.entries))).entries
        assert operator_norm(f2 - 2.0 * f1) <= 1e-9 * max(1, operator_norm(f1))


class TestBuildRealization:
    def test_dispatch_matches_builders(self):
        a = random_pd(3, (0.5, 2), 1)
        r = build_realization("identity")
        np.testing.assert_allclose(eval_pencil(r, MatrixTuple((a,))).entries,
                                   a.entries, atol=1e-12)
        r = build_realization("constant:2.0")
        np.testing.assert_allclose(eval_pencil(r, MatrixTuple((a,))).entries,
                                   2.0 * np.eye(3), atol=1e-14)
        r = build_realization("sqrt", n_nodes=64)
        got = eval_pencil(r, MatrixTuple((a,))).entries
        assert operator_norm(got - psd_sqrt(a).entries) <= 1e-7

    def test_built_realizations_satisfy_b_form_constraint(self):
        for text in ("cauchy:1.5", "power:0.5", "harmonic:0.3,0.7",
                     "arithmetic:0.5,0.5", "geomean:0.5"):
            r = build_realization(text, n_nodes=16)
            b0, bs = b_form(r)
            gap = b0.entries - sum(b.entries for b in bs)
            assert np.linalg.eigvalsh(gap)[0] >= -1e-12

    def test_built_realizations_pass_order_suites(self):
        from loewner import SuiteConfig, check_concave, check_jensen_isometry, check_monotone
        cfg = SuiteConfig(dims=(2, 3), trials=15, seed=77, tol=1e-8)
        for text in ("cauchy:1.5", "power:0.5", "harmonic:0.3,0.7",
                     "arithmetic:0.5,0.5", "geomean:0.5"):
            r = build_realization(text, n_nodes=48)
            assert check_monotone(r, cfg).passed, text
            assert check_concave(r, cfg).passed, text
            assert check_jensen_isometry(r, cfg).passed, text
