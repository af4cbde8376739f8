import numpy as np
import pytest

from isomonodromy.errors import MalformedInputError, PreconditionError
from isomonodromy.ratfun import (
    INFINITY,
    LaurentJet,
    RatMat,
    RatScalar,
    cluster_roots,
    form_at_infinity,
    polymat_det,
    polymat_inverse_jet,
    residue,
    residue_quadrature_oracle,
    residue_sum_all_poles,
)

from conftest import random_rational_one_form


class TestLaurentExpand:
    def test_one_over_z_at_zero(self):
        f = RatScalar.simple_pole(0.0, 1.0)
        jet = f.laurent(0.0, 1)
        assert jet.coefficient(-1) == 1.0
        assert jet.coefficient(0) == 0.0
        assert jet.coefficient(1) == 0.0

    def test_two_pole_product_at_zero(self):
        # oracle: 1/(z(z-1)) = -1/z + 1/(z-1), so c_-1 = -1, c_0 = -1
        f = RatScalar(np.array([1.0 + 0j]), [(0.0, 1), (1.0, 1)])
        jet = f.laurent(0.0, 0)
        assert abs(jet.coefficient(-1) - (-1.0)) < 1e-14
        assert abs(jet.coefficient(0) - (-1.0)) < 1e-14

    def test_z_squared_at_infinity(self):
        jet = RatScalar.monomial(2).laurent(INFINITY, 0)
        assert jet.coefficient(-2) == 1.0
        assert jet.coefficient(-1) == 0.0

    def test_regular_point_taylor(self):
        f = RatScalar(np.array([1.0, 2.0, 3.0], dtype=complex))
        jet = f.laurent(1.0 + 1.0j, 3)
        z0 = 1.0 + 1.0j
        assert abs(jet.coefficient(0) - f(z0)) < 1e-13
        assert abs(jet.coefficient(1) - (2 + 6 * z0)) < 1e-13
        assert abs(jet.coefficient(2) - 3.0) < 1e-13
        assert jet.coefficient(3) == 0.0

    def test_ambiguous_point_raises(self):
        f = RatScalar(np.array([1.0 + 0j]), [(0.0, 1), (1e-11, 2)],
                      _skip_cancel=True)
        with pytest.raises(MalformedInputError):
            f.laurent(0.0, 0)

    def test_matches_partial_fraction_termwise(self, rng):
        for _ in range(10):
            f, poles = random_rational_one_form(rng, n_poles=3, max_order=3)
            terms, poly = f.partial_fractions()
            rebuilt = RatScalar.from_partial_fractions(terms, poly)
            for p in poles:
                ja = f.laurent(p, 2)
                jb = rebuilt.laurent(p, 2)
                for k in range(ja.k_min, 3):
                    assert abs(ja.coefficient(k) - jb.coefficient(k)) < 1e-9 * (
                        1 + abs(ja.coefficient(k)))


class TestResidue:
    def test_simple_pole_matrix(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
        A = RatMat.from_polar_part(2.0, [M])
        assert np.allclose(A.residue(2.0), M)

    def test_double_pole_no_residue(self):
        f = RatScalar.simple_pole(0.0, 5.0, order=2)
        assert residue(f, 0.0) == 0.0

    def test_regular_point_zero(self):
        f = RatScalar.simple_pole(1.0, 1.0)
        assert residue(f, 5.0) == 0.0

    def test_residue_theorem_scalar(self, rng):
        for _ in range(20):
            f, _ = random_rational_one_form(rng, n_poles=3, max_order=3,
                                            tail_deg=1)
            assert abs(residue_sum_all_poles(f)) < 1e-12 * _scale(f)

    def test_residue_theorem_matrix(self, rng):
        entries = [[random_rational_one_form(rng, 2, 2)[0] for _ in range(2)]
                   for _ in range(2)]
        A = RatMat(entries)
        assert np.max(np.abs(residue_sum_all_poles(A))) < 1e-11

    def test_residue_at_infinity_of_one_over_z(self):
        f = RatScalar.simple_pole(0.0, 1.0)
        assert abs(residue(f, INFINITY) + 1.0) < 1e-14


class TestQuadratureOracle:
    def test_exact_for_one_over_z(self):
        f = RatScalar.simple_pole(0.0, 1.0)
        val = residue_quadrature_oracle(f, 0.0, 1.0, 64)
        assert abs(val - 1.0) < 1e-12

    def test_against_symbolic_residue(self):
        f = RatScalar.simple_pole(0.0, 2.0) + RatScalar(
            np.array([3.0 + 0j]), [(0.0, 3)])
        assert abs(residue_quadrature_oracle(f, 0.0, 0.7)
                   - residue(f, 0.0)) < 1e-12

    def test_holomorphic_gives_zero(self):
        f = RatScalar(np.array([1.0, 2.0, 1.5], dtype=complex))
        assert abs(residue_quadrature_oracle(f, 0.3, 0.5)) < 1e-13

    def test_enclosed_pole_rejected(self):
        f = RatScalar.simple_pole(0.0, 1.0) + RatScalar.simple_pole(0.5, 1.0)
        with pytest.raises(PreconditionError):
            residue_quadrature_oracle(f, 0.0, 0.9)

    def test_agreement_on_random_forms(self, rng):
        # acceptance-style: poles separated >= 0.1, radius = half separation
        for _ in range(100):
            f, poles = random_rational_one_form(rng, n_poles=3, max_order=2,
                                                min_sep=0.1)
            for p in poles:
                sep = min(abs(p - q) for q in poles if q != p)
                got = residue_quadrature_oracle(f, p, sep / 2, 256)
                want = residue(f, p)
                assert abs(got - want) < 1e-10 * max(1.0, abs(want))


class TestPartialFractions:
    def test_two_simple_poles(self):
        f = RatScalar(np.array([1.0 + 0j]), [(0.0, 1), (1.0, 1)])
        terms, poly = f.partial_fractions()
        d = {(complex(p), k): c for p, k, c in terms}
        assert abs(d[(0j, 1)] + 1.0) < 1e-14
        assert abs(d[(1 + 0j, 1)] - 1.0) < 1e-14
        assert np.allclose(poly, 0.0)

    def test_pure_polynomial(self):
        f = RatScalar.monomial(1)
        terms, poly = f.partial_fractions()
        assert terms == []
        assert np.allclose(poly, [0.0, 1.0])

    def test_double_pole_passthrough(self):
        f = RatScalar.simple_pole(2.0, 1.0, order=2)
        terms, poly = f.partial_fractions()
        assert terms == [(2.0 + 0j, 2, 1.0 + 0j)]
        assert np.allclose(poly, 0.0)

    def test_reconstruction_at_sample_points(self, rng):
        for _ in range(10):
            f, poles = random_rational_one_form(rng, n_poles=3, max_order=3,
                                                tail_deg=2)
            terms, poly = f.partial_fractions()
            rebuilt = RatScalar.from_partial_fractions(terms, poly)
            for _ in range(20):
                z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
                if min(abs(z - p) for p in poles) < 0.2:
                    continue
                err = abs(f(z) - rebuilt(z))
                assert err < 1e-10 * max(1.0, abs(f(z)))


class TestArithmetic:
    def test_cancellation_on_construction(self):
        # (z - 1) / (z - 1) should collapse to 1
        f = RatScalar(np.array([-1.0, 1.0], dtype=complex), [(1.0, 1)])
        assert f.poles == ()
        assert abs(f(3.7) - 1.0) < 1e-14

    def test_add_mul_div_eval(self, rng):
        f, _ = random_rational_one_form(rng, 2, 2)
        g, _ = random_rational_one_form(rng, 2, 2)
        z = 0.618 + 0.3j
        assert abs((f + g)(z) - (f(z) + g(z))) < 1e-10
        assert abs((f * g)(z) - f(z) * g(z)) < 1e-10
        assert abs((f / g)(z) - f(z) / g(z)) < 1e-8

    def test_derivative_matches_finite_difference(self, rng):
        f, _ = random_rational_one_form(rng, 3, 2, tail_deg=1)
        z = 0.11 - 0.47j
        h = 1e-6
        fd = (f(z + h) - f(z - h)) / (2 * h)
        assert abs(f.derivative()(z) - fd) < 1e-7 * max(1.0, abs(fd))

    def test_pole_order_at_infinity(self):
        f = RatScalar(np.array([0.0, 0.0, 0.0, 1.0], dtype=complex), [(0.0, 1)])
        assert f.pole_order(INFINITY) == 2


class TestJets:
    def test_mul_range_tracking(self):
        a = LaurentJet(0.0, -1, np.array([1.0, 2.0, 3.0], dtype=complex))
        b = LaurentJet(0.0, 0, np.array([1.0, 1.0], dtype=complex))
        c = a * b
        assert c.k_min == -1
        assert c.k_max == 0  # limited by b's truncation
        assert c.coefficient(-1) == 1.0
        assert c.coefficient(0) == 3.0

    def test_matrix_inverse(self, rng):
        n = 3
        coeffs = rng.standard_normal((4, n, n)) + 1j * rng.standard_normal((4, n, n))
        coeffs[0] += 3 * np.eye(n)
        jet = LaurentJet(0.0, 0, coeffs)
        inv = jet.inverse()
        prod = jet * inv
        assert np.allclose(prod.coefficient(0), np.eye(n), atol=1e-12)
        for k in range(1, prod.k_max + 1):
            assert np.max(np.abs(prod.coefficient(k))) < 1e-11

    def test_derivative_and_residue(self):
        jet = LaurentJet(0.0, -2, np.array([5.0, 7.0, 1.0, 2.0], dtype=complex))
        d = jet.derivative(as_form=True)
        assert d.form_degree == 1
        # d/dz of 7/z is -7/z^2; residue of the derivative form is 0
        assert d.coefficient(-2) == -7.0
        assert d.residue() == 0.0

    def test_vector_field_contraction(self):
        # m(z) d/dz applied to q dz^2 is a 1-form
        q = LaurentJet(0.0, -2, np.array([2.0, 0.0, 1.0], dtype=complex),
                       form_degree=2)
        m = LaurentJet(0.0, 0, np.array([1.0, 0.5], dtype=complex),
                       form_degree=-1)
        prod = m * q
        assert prod.form_degree == 1
        assert prod.coefficient(-1) == 1.0

    def test_coefficient_beyond_truncation_raises(self):
        jet = LaurentJet(0.0, 0, np.array([1.0 + 0j]))
        with pytest.raises(PreconditionError):
            jet.coefficient(1)


class TestPolyMat:
    def test_det_of_companion_style(self):
        # det [[z, -5], [0, 1]] = z
        T = np.zeros((2, 2, 2), dtype=complex)
        T[0] = [[0.0, -5.0], [0.0, 1.0]]
        T[1] = [[1.0, 0.0], [0.0, 0.0]]
        d = polymat_det(T)
        assert np.allclose(d, [0.0, 1.0])

    def test_inverse_jet_roundtrip(self, rng):
        T = np.zeros((2, 2, 2), dtype=complex)
        T[0] = [[0.0, -2.0], [0.0, 1.0]]
        T[1] = [[1.0, 0.0], [0.0, 0.0]]
        inv = polymat_inverse_jet(T, 3)
        Tjet = LaurentJet(0.0, 0, T)
        prod = Tjet * inv
        assert np.allclose(prod.coefficient(0), np.eye(2), atol=1e-13)
        for k in range(1, prod.k_max + 1):
            assert np.max(np.abs(prod.coefficient(k))) < 1e-13

    def test_cluster_roots_multiplicity(self):
        # (z-1)^2 (z+2)
        c = np.array([2.0, -3.0, 0.0, 1.0], dtype=complex)
        roots = cluster_roots(c)
        roots = sorted(roots, key=lambda rm: rm[0].real)
        assert roots[0][1] == 1 and abs(roots[0][0] + 2) < 1e-8
        assert roots[1][1] == 2 and abs(roots[1][0] - 1) < 1e-6


def test_form_at_infinity_chart_change():
    # omega = dz has a double pole at infinity with zero residue;
    # omega = dz/z has residue -1 at infinity
    one = RatScalar.const(1.0)
    w_form = form_at_infinity(one)
    assert w_form.pole_order(0.0) == 2
    assert abs(residue(RatScalar.simple_pole(0.0, 1.0), INFINITY) + 1) < 1e-14


def _scale(f):
    vals = [abs(f(z)) for z in (2.5 + 1j, -3.1 + 0.2j, 0.1 - 2.7j)]
    return max(1.0, *vals)
