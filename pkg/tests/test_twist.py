import numpy as np
import pytest

from isomonodromy.connection import Connection
from isomonodromy.errors import MalformedInputError, PreconditionError
from isomonodromy.ratfun import RatMat, RatScalar
from isomonodromy.twist import (
    MatrixDivisor,
    TwistSite,
    degree,
    normal_form,
    pull_connection,
    push_connection,
    total_trace_residue,
)

from conftest import fuchsian_connection, random_invertible, random_matrix


def z_identity_site(p, n, order=1):
    germ = np.zeros((order + 1, n, n), dtype=complex)
    germ[order] = np.eye(n)
    return TwistSite(p, germ)


class TestNormalForm:
    def test_rank_two_example(self):
        site = normal_form(0.5, (0.0, 5.0))
        # germ is [[zeta, -5], [0, 1]]
        assert np.allclose(site.germ[0], [[0.0, -5.0], [0.0, 1.0]])
        assert np.allclose(site.germ[1], [[1.0, 0.0], [0.0, 0.0]])
        assert np.allclose(site.det_poly(), [0.0, 1.0])
        assert site.point == 0.5

    def test_rank_one(self):
        site = normal_form(2.0, (0.0,))
        assert np.allclose(site.det_poly(), [0.0, 1.0])
        assert degree(site) == 1

    def test_rank_three_zero_hyperplane(self):
        site = normal_form(0.0, (0.0, 0.0, 0.0))
        val = site.germ[0] + site.germ[1]  # T at zeta = 1
        assert np.allclose(val, np.diag([1.0, 1.0, 1.0]))
        assert np.allclose(site.germ[0][0], [0.0, 0.0, 0.0])

    def test_position_parameter_recenters(self):
        site = normal_form(1.0, (0.25, 3.0))
        assert site.point == 1.25
        assert degree(site) == 1


class TestDegree:
    def test_normal_form_is_one(self):
        assert degree(normal_form(0.0, (0.0, 1.0, 2.0))) == 1

    def test_z_identity_is_n(self):
        for n in (1, 2, 3):
            assert degree(z_identity_site(1.0, n)) == n

    def test_empty_divisor(self):
        assert degree(MatrixDivisor(())) == 0

    def test_invariant_under_right_units(self, rng):
        site = normal_form(0.0, (0.0, 1.5))
        F = random_invertible(rng, 2)
        assert degree(site.right_multiply(F)) == degree(site)
        # polynomial unipotent factor (det = 1)
        U = np.zeros((2, 2, 2), dtype=complex)
        U[0] = np.eye(2)
        U[1] = [[0.0, 0.7], [0.0, 0.0]]
        assert degree(site.right_multiply(U)) == degree(site)

    def test_identically_singular_rejected(self):
        germ = np.zeros((1, 2, 2), dtype=complex)
        germ[0] = [[1.0, 0.0], [0.0, 0.0]]
        with pytest.raises(MalformedInputError):
            TwistSite(0.0, germ)

    def test_far_vanishing_rejected(self):
        # det vanishes at zeta = 1, away from the site
        germ = np.zeros((2, 2, 2), dtype=complex)
        germ[0] = [[-1.0, 0.0], [0.0, 1.0]]
        germ[1] = [[1.0, 0.0], [0.0, 0.0]]
        with pytest.raises(MalformedInputError):
            TwistSite(0.0, germ)


class TestPushPull:
    def test_rank_one_zero_connection(self):
        conn = Connection.from_ratmat(RatMat.zero(1))
        site = z_identity_site(0.0, 1)
        pushed = push_connection(site, conn)
        # A0 = -dz/z: residue -1 at the twist point
        assert abs(pushed.residue_matrix(0.0)[0, 0] + 1.0) < 1e-12
        assert pushed.twist_points == (0.0,)

    def test_invertible_site_keeps_poles(self, rng):
        conn = Connection.from_ratmat(
            fuchsian_connection([1.0, -1.0],
                                [random_matrix(rng, 2), random_matrix(rng, 2)]))
        # degree-0 "twist": constant invertible germ
        G = random_invertible(rng, 2)
        T = RatMat.from_constant(G)
        A0 = (T @ conn.matrix @ T.inverse())
        out = Connection.from_ratmat(A0)
        assert sorted(np.round(np.array(out.matrix.pole_points()), 8).tolist(),
                      key=lambda z: (z.real, z.imag)) == \
            sorted(np.round(np.array(conn.matrix.pole_points()), 8).tolist(),
                   key=lambda z: (z.real, z.imag))

    def test_normal_form_trace_residue(self):
        conn = Connection.from_ratmat(RatMat.zero(2))
        site = normal_form(0.3, (0.0, 2.0))
        pushed = push_connection(site, conn)
        res = pushed.residue_matrix(0.3)
        assert abs(np.trace(res) + 1.0) < 1e-11

    def test_pull_inverts_push(self, rng):
        conn = Connection.from_ratmat(
            fuchsian_connection([1.0, -1.0],
                                [random_matrix(rng, 2), random_matrix(rng, 2)]))
        div = MatrixDivisor((normal_form(0.0, (0.0, 1.0)),))
        back = pull_connection(div, push_connection(div, conn))
        for z in (0.5 + 0.5j, 2.0 - 1.0j, -0.7 + 0.2j):
            assert np.max(np.abs(back.eval(z) - conn.eval(z))) < 1e-10

    def test_pull_of_holomorphic_rank_one(self):
        M = np.array([[2.5]], dtype=complex)
        conn = Connection.from_ratmat(RatMat.from_constant(M))
        site = z_identity_site(0.0, 1)
        pulled = pull_connection(site, conn)
        # A1 = M dz + dz/z
        assert abs(pulled.residue_matrix(0.0)[0, 0] - 1.0) < 1e-12
        assert abs(pulled.eval(2.0)[0, 0] - (2.5 + 0.5)) < 1e-12

    def test_overlap_rejected(self, rng):
        conn = Connection.from_ratmat(
            fuchsian_connection([0.0], [random_matrix(rng, 2)]))
        with pytest.raises(PreconditionError):
            push_connection(z_identity_site(0.0, 2), conn)

    def test_trace_residue_bookkeeping(self, rng):
        # sum res tr A0 = sum res tr A1 - deg(T)
        for _ in range(10):
            mats = [random_matrix(rng, 2) for _ in range(2)]
            conn = Connection.from_ratmat(fuchsian_connection([1.2, -0.8], mats))
            before = total_trace_residue(conn)
            kind = rng.integers(0, 3)
            if kind == 0:
                site = normal_form(0.1, (0.0, complex(rng.standard_normal())))
                site = site.right_multiply(random_invertible(rng, 2))
            elif kind == 1:
                site = z_identity_site(0.1, 2)
            else:
                site = normal_form(0.1, (0.0, 1.0))
            pushed = push_connection(site, conn)
            after = total_trace_residue(pushed)
            assert abs(after - (before - degree(site))) < 1e-10


def test_multi_site_degree_adds(rng):
    div = MatrixDivisor((normal_form(0.0, (0.0, 1.0)),
                         z_identity_site(2.0, 2)))
    assert degree(div) == 3
    conn = Connection.from_ratmat(
        fuchsian_connection([1.0, -1.0],
                            [random_matrix(rng, 2), random_matrix(rng, 2)]))
    pushed = push_connection(div, conn)
    assert abs(total_trace_residue(pushed)
               - (total_trace_residue(conn) - 3)) < 1e-9
