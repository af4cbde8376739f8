"""Deformation states in canonical per-pole coordinates.

A state stores, at every pole, an invertible constant frame ``h``, an
off-diagonal unipotent jet ``u`` (orders ``1 .. l-2``), and a dressed polar
jet ``Lambda``: the connection's polar part there is the polar part of

``h (I + u(zeta)) Lambda (I + u(zeta))^-1 h^-1``

with ``Lambda_{-1}`` a free matrix (the residue momentum) and
``Lambda_{-k}``, ``k >= 2``, fixed diagonal with regular leading term (the
irregular type).  This realizes the partial reduction concretely: the
irregular data is pinned diagonal in the dressed frame and the order ``-1``
jet stays free.  Two families of frame-jet components are pure gauge for
this data and are normalized away: diagonal jets (they commute with the
irregular type) and the full top order ``l-1`` (central in the truncated
jet group).  What remains is exactly a symplectic chart on the partially
reduced space.  Trivialization jets over the divisor are the inverses of
the frame jets.

Chart-vector layout, per pole: the ``n^2`` entries of ``h`` (row-major),
then for each jet order ``k = 1 .. l-2`` the ``n^2 - n`` off-diagonal
entries of ``u_k`` (row-major, skipping the diagonal), then the ``n^2``
entries of ``Lambda_{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import Connection, TAU_REG, _sorted_eig
from .errors import MalformedInputError, RegularityError

N_MAX = 1e8   # coefficient-norm cap; beyond this a flow is flagged as blown up


def offdiag_indices(n):
    return [(a, b) for a in range(n) for b in range(n) if a != b]


@dataclass(frozen=True)
class PoleData:
    """Canonical data of one pole: position, order, frame jet, dressed polar."""

    t: complex
    l: int
    h: np.ndarray                  # (n, n) invertible constant frame
    lam_res: np.ndarray            # (n, n) dressed residue Lambda_{-1}
    lam_irr: np.ndarray            # (l-1, n) diagonal entries, row j <-> order -(j+2)
    u: np.ndarray                  # (max(l-2,0), n, n) off-diagonal jet, row k <-> order k+1

    def __init__(self, t, l, h, lam_res, lam_irr=None, u=None):
        object.__setattr__(self, "t", complex(t))
        object.__setattr__(self, "l", int(l))
        h = np.array(h, dtype=complex)
        n = h.shape[0]
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lam_res", np.array(lam_res, dtype=complex))
        if lam_irr is None:
            lam_irr = np.zeros((self.l - 1, n), dtype=complex)
        object.__setattr__(self, "lam_irr",
                           np.array(lam_irr, dtype=complex).reshape(self.l - 1, n))
        n_u = max(self.l - 2, 0)
        if u is None:
            u = np.zeros((n_u, n, n), dtype=complex)
        u = np.array(u, dtype=complex).reshape(n_u, n, n)
        for k in range(u.shape[0]):
            if np.max(np.abs(np.diag(u[k]))) > 1e-13 * max(1.0, np.max(np.abs(u[k]))):
                raise MalformedInputError(
                    "frame-jet coordinates must have zero diagonal")
            np.fill_diagonal(u[k], 0.0)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.h.shape[0]

    def h_inv(self):
        return np.linalg.inv(self.h)

    def frame_jet(self):
        """Coefficients of ``h (I + u(zeta))``, shape (l, n, n)."""
        out = np.zeros((self.l, self.n, self.n), dtype=complex)
        out[0] = self.h
        for k in range(1, self.l - 1):
            out[k] = self.h @ self.u[k - 1]
        return out

    def unipotent_jet(self):
        """Coefficients of ``I + u(zeta)`` through order l-1 (top order zero)."""
        n, l = self.n, self.l
        U = np.zeros((l, n, n), dtype=complex)
        U[0] = np.eye(n)
        for k in range(1, l - 1):
            U[k] = self.u[k - 1]
        return U

    def unipotent_inverse_jet(self):
        """Coefficients of ``(I + u)^-1`` through order l-1."""
        n, l = self.n, self.l
        U = self.unipotent_jet()
        V = np.zeros((l, n, n), dtype=complex)
        V[0] = np.eye(n)
        for m in range(1, l):
            acc = np.zeros((n, n), dtype=complex)
            for j in range(1, m + 1):
                acc += U[j] @ V[m - j]
            V[m] = -acc
        return V

    def lam_jet(self):
        """Dressed polar coefficients, index k <-> order -(k+1); shape (l, n, n)."""
        out = np.zeros((self.l, self.n, self.n), dtype=complex)
        out[0] = self.lam_res
        for j in range(self.l - 1):
            out[j + 1] = np.diag(self.lam_irr[j])
        return out

    def polar_coeffs(self):
        """``[C_1, ..., C_l]`` with ``C_k`` the coefficient of ``(z-t)**-k``.

        Polar part of ``F Lambda F^-1`` with ``F`` the frame jet.
        """
        n, l = self.n, self.l
        hinv = self.h_inv()
        U = self.unipotent_jet()
        V = self.unipotent_inverse_jet()
        lam = self.lam_jet()
        # U_i lam_{-(r+1)} V_j sits at order i + j - (r + 1)
        out = []
        for k in range(1, l + 1):
            acc = np.zeros((n, n), dtype=complex)
            for r in range(k - 1, l):
                s = r + 1 - k
                for i in range(0, min(s, l - 1) + 1):
                    j = s - i
                    if j < l:
                        acc += U[i] @ lam[r] @ V[j]
            out.append(self.h @ acc @ hinv)
        return out

    def leading_is_regular(self):
        if self.l == 1:
            return True
        lead = self.lam_irr[self.l - 2]
        gaps = [abs(lead[a] - lead[b]) for a in range(self.n)
                for b in range(a + 1, self.n)]
        scale = max(1.0, float(np.max(np.abs(lead))))
        return all(g > TAU_REG * scale for g in gaps)

    # -- chart packing --------------------------------------------------------

    def chart_size(self):
        n = self.n
        return 2 * n * n + max(self.l - 2, 0) * (n * n - n)

    def chart_slice(self):
        parts = [self.h.ravel()]
        for k in range(max(self.l - 2, 0)):
            parts.append(np.array([self.u[k][a, b]
                                   for a, b in offdiag_indices(self.n)]))
        parts.append(self.lam_res.ravel())
        return np.concatenate(parts)

    def with_chart_slice(self, vec):
        n = self.n
        h = vec[: n * n].reshape(n, n)
        at = n * n
        u = np.zeros((max(self.l - 2, 0), n, n), dtype=complex)
        for k in range(max(self.l - 2, 0)):
            for a, b in offdiag_indices(n):
                u[k][a, b] = vec[at]
                at += 1
        lam = vec[at: at + n * n].reshape(n, n)
        return PoleData(self.t, self.l, h, lam, self.lam_irr, u)


@dataclass(frozen=True)
class ModuliPoint:
    """Pole positions plus the fixed irregular types (diagonal, per pole)."""

    positions: tuple
    irregular: tuple   # one (l-1, n) array per pole

    @classmethod
    def of(cls, state):
        return cls(tuple(p.t for p in state.poles),
                   tuple(np.array(p.lam_irr) for p in state.poles))


@dataclass(frozen=True)
class FlowState:
    """Full deformation state: canonical pole data plus frozen twist sites."""

    n: int
    poles: tuple
    twist: object = None           # MatrixDivisor or None

    def __post_init__(self):
        seen = [p.t for p in self.poles]
        for i in range(len(seen)):
            for j in range(i + 1, len(seen)):
                if abs(seen[i] - seen[j]) < 1e-6:
                    raise MalformedInputError("pole positions too close")
        for p in self.poles:
            if p.n != self.n:
                raise MalformedInputError("pole data rank mismatch")
            if not p.leading_is_regular():
                raise RegularityError(
                    f"irregular type at {p.t} has a clustered leading term")

    @property
    def moduli(self):
        return ModuliPoint.of(self)

    def connection(self):
        data = [(p.t, p.polar_coeffs()) for p in self.poles]
        conn = Connection.from_polar_parts(data, n=self.n)
        if self.twist is not None:
            from .twist import push_connection
            conn = push_connection(self.twist, conn)
        return conn

    @classmethod
    def from_connection(cls, conn, twist=None):
        """Factor a connection into canonical pole data (zero frame jets).

        Fuchsian poles get ``h = I``; at higher-order poles the frame is the
        eigenframe of the (regular) leading coefficient, which must
        simultaneously diagonalize every order ``<= -2`` coefficient (states
        outside this slice can be brought into it with a jet gauge first).
        """
        poles = []
        for t, l in zip(conn.divisor.points, conn.divisor.mults):
            jet = conn.laurent(t, -1)
            if l == 1:
                poles.append(PoleData(t, 1, np.eye(conn.n),
                                      jet.coefficient(-1)))
                continue
            lead = jet.coefficient(-l)
            w, V = _sorted_eig(lead)
            scale = max(1.0, float(np.max(np.abs(w))))
            gap = min(abs(w[a] - w[b]) for a in range(conn.n)
                      for b in range(a + 1, conn.n))
            if gap <= TAU_REG * scale:
                raise RegularityError(f"leading term at {t} is not regular")
            Vinv = np.linalg.inv(V)
            lam_irr = np.zeros((l - 1, conn.n), dtype=complex)
            for k in range(2, l + 1):
                D = Vinv @ jet.coefficient(-k) @ V
                off = D - np.diag(np.diag(D))
                if np.max(np.abs(off)) > 1e-8 * max(1.0, np.max(np.abs(D))):
                    raise MalformedInputError(
                        f"order -{k} coefficient at {t} is not diagonal in "
                        f"the leading eigenframe; gauge into the chart first")
                lam_irr[k - 2] = np.diag(D)
            lam_res = Vinv @ jet.coefficient(-1) @ V
            poles.append(PoleData(t, l, V, lam_res, lam_irr))
        return cls(conn.n, tuple(poles), twist)

    # -- flat complex coordinates (chart vector) -------------------------------

    def chart_dim(self):
        return sum(p.chart_size() for p in self.poles)

    def chart_vector(self):
        parts = [p.chart_slice() for p in self.poles]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)

    def with_chart_vector(self, vec):
        poles = []
        at = 0
        for p in self.poles:
            size = p.chart_size()
            poles.append(p.with_chart_slice(vec[at: at + size]))
            at += size
        return FlowState(self.n, tuple(poles), self.twist)

    def with_positions(self, positions):
        poles = tuple(PoleData(t, p.l, p.h, p.lam_res, p.lam_irr, p.u)
                      for t, p in zip(positions, self.poles))
        return FlowState(self.n, poles, self.twist)

    def with_irregular(self, irregular):
        poles = tuple(PoleData(p.t, p.l, p.h, p.lam_res, irr, p.u)
                      for irr, p in zip(irregular, self.poles))
        return FlowState(self.n, poles, self.twist)

    def norm(self):
        vals = []
        for p in self.poles:
            vals.append(np.max(np.abs(p.h)))
            vals.append(np.max(np.abs(p.lam_res)))
            if p.l > 1:
                vals.append(np.max(np.abs(p.lam_irr)))
                vals.append(np.max(np.abs(p.u)) if p.u.size else 0.0)
        return max(vals) if vals else 0.0


@dataclass(frozen=True)
class ExtendedState:
    """Flow state plus the cotangent variables dual to the base directions.

    ``q_dual`` holds, per pole, the polar-slot data of a quadratic
    differential with divisor bounded by D (slot ``m`` pairs with the local
    direction ``zeta**m d/dzeta``); ``b_dual`` holds, per pole, diagonal
    data shaped like the sub-leading diagonal jet (orders ``0 .. l-2``).
    """

    state: FlowState
    q_dual: tuple     # one (l_i,) complex array per pole
    b_dual: tuple     # one (l_i - 1, n) complex array per pole

    def __post_init__(self):
        for p, q, b in zip(self.state.poles, self.q_dual, self.b_dual):
            if np.shape(q) != (p.l,):
                raise MalformedInputError("q_dual slot shape mismatch")
            if np.shape(b) != (p.l - 1, p.n):
                raise MalformedInputError("b_dual slot shape mismatch")
