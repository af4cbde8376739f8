"""Matrix divisors: pointwise twists of the trivial bundle.

A twist site is a polynomial matrix germ ``T(zeta)`` in the local coordinate
``zeta = z - p`` whose determinant vanishes at the site (and nowhere else);
its image cuts a subsheaf of the trivial bundle.  The degree of the divisor
is the total vanishing order of the determinants.  Connections transfer
across the inclusion by the gauge formula ``A0 = -dT T^-1 + T A1 T^-1``,
which trades the twist for extra integer-residue poles with identity
monodromy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import Connection, TAU_SEP
from .errors import MalformedInputError, PreconditionError
from .ratfun import (
    RatMat,
    cluster_roots,
    polymat_det,
    polymat_inverse_jet,
)


@dataclass(frozen=True)
class TwistSite:
    """One site: point ``p`` and polynomial germ ``T`` in ``zeta = z - p``.

    ``germ`` has shape ``(deg+1, n, n)``, ascending powers of ``zeta``.
    """

    point: complex
    germ: np.ndarray

    def __init__(self, point, germ):
        germ = np.asarray(germ, dtype=complex)
        if germ.ndim != 3 or germ.shape[1] != germ.shape[2]:
            raise MalformedInputError("germ must have shape (deg+1, n, n)")
        object.__setattr__(self, "point", complex(point))
        object.__setattr__(self, "germ", germ)
        d = self.det_poly()
        if np.all(np.abs(d) == 0):
            raise MalformedInputError("identically singular germ")
        # all vanishing must happen at the site itself
        for root, _ in cluster_roots(d, tol=1e-6):
            if abs(root) > 1e-6:
                raise MalformedInputError(
                    f"det of the germ at {self.point} vanishes away from the "
                    f"site (local root {root})")

    @property
    def n(self):
        return self.germ.shape[1]

    def det_poly(self):
        return polymat_det(self.germ)

    def vanishing_order(self):
        d = self.det_poly()
        scale = np.max(np.abs(d))
        mu = 0
        while mu < d.size and abs(d[mu]) <= 1e-9 * scale:
            mu += 1
        return mu

    def as_ratmat(self):
        """The germ as a global polynomial matrix in z."""
        return RatMat.from_poly_matrix(self.germ, center=self.point)

    def inverse_jet(self, k_max):
        return polymat_inverse_jet(self.germ, k_max)

    def right_multiply(self, F):
        """Site with germ ``T F`` for a polynomial (or constant) germ ``F``."""
        F = np.asarray(F, dtype=complex)
        if F.ndim == 2:
            F = F[None, :, :]
        out = np.zeros((self.germ.shape[0] + F.shape[0] - 1, self.n, self.n),
                       dtype=complex)
        for i in range(self.germ.shape[0]):
            for j in range(F.shape[0]):
                out[i + j] += self.germ[i] @ F[j]
        return TwistSite(self.point, out)


@dataclass(frozen=True)
class MatrixDivisor:
    """Finite collection of pairwise-separated twist sites."""

    sites: tuple

    def __init__(self, sites):
        sites = tuple(sites)
        for i in range(len(sites)):
            for j in range(i + 1, len(sites)):
                if abs(sites[i].point - sites[j].point) <= TAU_SEP:
                    raise MalformedInputError("twist sites too close together")
        object.__setattr__(self, "sites", sites)

    def points(self):
        return [s.point for s in self.sites]

    def global_ratmat(self, n=None):
        """Ordered product of the site germs as one rational (polynomial) matrix."""
        if not self.sites:
            if n is None:
                raise MalformedInputError("empty divisor needs an explicit rank")
            return RatMat.identity(n)
        out = self.sites[0].as_ratmat()
        for s in self.sites[1:]:
            out = out @ s.as_ratmat()
        return out


def normal_form(p, params):
    """Canonical degree-one site from a position and hyperplane data.

    ``params = (T1, ..., Tn)``: the vanishing point is ``p + T1`` (the local
    coordinate is recentred so the determinant vanishes exactly at the site)
    and the germ there is the companion-style matrix with first row
    ``(zeta, -T2, ..., -Tn)`` over identity rows; its determinant is ``zeta``.
    """
    params = [complex(c) for c in params]
    n = len(params)
    germ = np.zeros((2, n, n), dtype=complex)
    for j in range(1, n):
        germ[0, 0, j] = -params[j]
        germ[0, j, j] = 1.0
    germ[1, 0, 0] = 1.0
    return TwistSite(p + params[0], germ)


def degree(divisor):
    """Total vanishing order of the site determinants (a first Chern drop)."""
    if isinstance(divisor, TwistSite):
        return divisor.vanishing_order()
    return sum(s.vanishing_order() for s in divisor.sites)


def push_connection(divisor, conn):
    """Transfer a connection across the inclusion into the ambient bundle.

    With ``T`` the (ordered) product of the site germs, the ambient form is
    ``A0 = T^-1 A1 T - T^-1 dT``: the gauge of the fundamental-solution
    system ``dY = A Y`` whose transition matrix carries ambient-frame
    coordinates to twisted-frame coordinates.  New poles appear exactly at
    the twist points; since the solution is gauged by a single-valued
    rational matrix, the monodromy around them is the identity, and the sum
    of trace residues drops by ``deg T``.
    """
    if isinstance(divisor, TwistSite):
        divisor = MatrixDivisor((divisor,))
    _check_disjoint(divisor, conn)
    T = divisor.global_ratmat(conn.n)
    Tinv = T.inverse()
    A0 = (Tinv @ conn.matrix @ T) - (Tinv @ T.derivative())
    return Connection.from_ratmat(A0, twist_points=tuple(divisor.points()),
                                  base_pole=conn.base_pole)


def pull_connection(divisor, conn0):
    """Inverse transfer: ``A1 = T A0 T^-1 + dT T^-1``."""
    if isinstance(divisor, TwistSite):
        divisor = MatrixDivisor((divisor,))
    T = divisor.global_ratmat(conn0.n)
    Tinv = T.inverse()
    A1 = (T @ conn0.matrix @ Tinv) + (T.derivative() @ Tinv)
    return Connection.from_ratmat(A1, base_pole=conn0.base_pole)


def total_trace_residue(conn):
    """Sum of ``res tr`` over all finite poles of the connection form."""
    tr = conn.matrix.trace()
    acc = 0.0 + 0j
    for r, _ in tr.poles:
        jet = tr.laurent(r, -1)
        acc += jet.coefficient(-1)
    return acc


def _check_disjoint(divisor, conn):
    for s in divisor.sites:
        for t in conn.divisor.points:
            if abs(s.point - t) <= TAU_SEP:
                raise PreconditionError(
                    f"twist site {s.point} overlaps the polar divisor")
        if conn.base_pole is not None and not np.isinf(
                abs(conn.base_pole.point)):
            if abs(s.point - conn.base_pole.point) <= TAU_SEP:
                raise PreconditionError("twist site overlaps the base pole")
