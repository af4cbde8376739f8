"""Parallel transport of fundamental solutions and monodromy representations.

The transported system is ``dY/dz = A(z) Y`` along piecewise line/arc paths
in the punctured plane, with adaptive high-order Runge-Kutta (DOP853) on the
complexified matrix system.  Loops around poles are deterministic keyholes:
a radial approach from the base point, a full positively-oriented circle, and
the radial return.  With loops ordered by increasing argument from the base
point, the product ``M_l ... M_1`` is the monodromy of a loop around
everything, hence the identity whenever the form is regular at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .connection import TAU_SEP
from .errors import IntegrationAbort, PreconditionError

TAU_MONO = 1e-8
DEFAULT_TOL = 1e-10


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineSegment:
    start: complex
    end: complex

    def at(self, s):
        return self.start + s * (self.end - self.start)

    def velocity(self, s):
        return self.end - self.start

    def distance_to(self, p):
        d = self.end - self.start
        L2 = abs(d) ** 2
        if L2 == 0.0:
            return abs(p - self.start)
        t = ((p - self.start) * np.conj(d)).real / L2
        t = min(1.0, max(0.0, t))
        return abs(p - (self.start + t * d))


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def at(self, s):
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, s):
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    def distance_to(self, p):
        v = p - self.center
        r = abs(v)
        if r == 0.0:
            return self.radius
        ang = np.angle(v)
        lo, hi = sorted((self.theta0, self.theta1))
        if hi - lo >= 2 * np.pi - 1e-12:
            return abs(r - self.radius)
        # bring ang into [lo, lo + 2pi)
        while ang < lo:
            ang += 2 * np.pi
        if ang <= hi:
            return abs(r - self.radius)
        return min(abs(p - self.at(0.0)), abs(p - self.at(1.0)))


@dataclass(frozen=True)
class Path:
    """Piecewise-smooth curve with a declared clearance from all poles."""

    segments: tuple
    clearance: float = 2 * TAU_SEP

    def __init__(self, segments, clearance=2 * TAU_SEP):
        segments = tuple(segments)
        for a, b in zip(segments, segments[1:]):
            if abs(a.at(1.0) - b.at(0.0)) > 1e-9:
                raise PreconditionError("path segments do not join continuously")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "clearance", float(clearance))

    @property
    def start(self):
        return self.segments[0].at(0.0)

    @property
    def end(self):
        return self.segments[-1].at(1.0)

    def distance_to(self, p):
        return min(s.distance_to(p) for s in self.segments)

    def reverse(self):
        rev = []
        for seg in reversed(self.segments):
            if isinstance(seg, LineSegment):
                rev.append(LineSegment(seg.end, seg.start))
            else:
                rev.append(ArcSegment(seg.center, seg.radius,
                                      seg.theta1, seg.theta0))
        return Path(tuple(rev), self.clearance)

    def concatenate(self, other):
        if abs(self.end - other.start) > 1e-9:
            raise PreconditionError("paths do not join")
        return Path(self.segments + other.segments,
                    min(self.clearance, other.clearance))

    @classmethod
    def line(cls, a, b, clearance=2 * TAU_SEP):
        return cls((LineSegment(complex(a), complex(b)),), clearance)

    @classmethod
    def circle(cls, center, radius, theta0=0.0, turns=1.0,
               clearance=2 * TAU_SEP):
        return cls((ArcSegment(complex(center), float(radius), theta0,
                               theta0 + 2 * np.pi * turns),), clearance)

    @classmethod
    def keyhole(cls, base, pole, radius, clearance=2 * TAU_SEP):
        """Radial approach, full positive circle, radial return."""
        base = complex(base)
        pole = complex(pole)
        phi = np.angle(base - pole)
        entry = pole + radius * np.exp(1j * phi)
        return cls((LineSegment(base, entry),
                    ArcSegment(pole, radius, phi, phi + 2 * np.pi),
                    LineSegment(entry, base)), clearance)


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------

def _compiled_eval(conn):
    """Fast pointwise evaluator of the connection matrix (polar-part form)."""
    from .connection import polar_decompose
    pole_data, tail = polar_decompose(conn.matrix)
    tail = np.asarray(tail, dtype=complex)
    n = conn.n

    def ev(z):
        out = np.zeros((n, n), dtype=complex)
        for t, coeffs in pole_data:
            u = 1.0 / (z - t)
            w = u
            for C in coeffs:
                out += C * w
                w *= u
        if tail.size:
            w = 1.0
            for k in range(tail.shape[0]):
                out += tail[k] * w
                w *= z
        return out

    return ev


def _check_clearance(conn, path):
    if path.clearance < 2 * TAU_SEP:
        raise PreconditionError(
            f"path clearance {path.clearance} below the minimum {2 * TAU_SEP}")
    for p in conn.all_finite_poles():
        d = path.distance_to(p)
        if d < path.clearance:
            raise PreconditionError(
                f"path comes within {d:.3e} of the pole {p}; clearance is "
                f"{path.clearance:.3e}")


SAFETY = 1e-2   # controller margin so the local-error contract holds strictly


def transport(conn, path, tol=DEFAULT_TOL, with_logdet=False, Y0=None):
    """Fundamental-solution transport ``Y(end)`` with ``Y(start) = I``.

    Integrates ``dY/dz = A(z) Y`` along the path with local error at most
    ``tol`` (the embedded error controller is run a fixed safety margin
    below the requested bound); the log-determinant (integral of ``tr A``)
    rides along so callers can run the Liouville determinant check.
    """
    _check_clearance(conn, path)
    n = conn.n
    ev = _compiled_eval(conn)
    Y = np.eye(n, dtype=complex) if Y0 is None else np.array(Y0, dtype=complex)
    logdet = 0.0 + 0j

    def rhs(s, y, seg):
        z = seg.at(s)
        dz = seg.velocity(s)
        A = ev(z)
        Ymat = y[:-1].reshape(n, n)
        dY = dz * (A @ Ymat)
        return np.concatenate([dY.ravel(), [dz * np.trace(A)]])

    rtol = max(SAFETY * tol, 1e-13)
    for seg in path.segments:
        y0 = np.concatenate([Y.ravel(), [logdet]])
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853",
                        rtol=rtol, atol=SAFETY * tol, args=(seg,),
                        dense_output=False)
        if not sol.success:
            raise IntegrationAbort("stiffness",
                                   f"transport failed on {seg}: {sol.message}")
        Y = sol.y[:-1, -1].reshape(n, n)
        logdet = sol.y[-1, -1]
    if with_logdet:
        return Y, logdet
    return Y


# ---------------------------------------------------------------------------
# monodromy representations
# ---------------------------------------------------------------------------

@dataclass
class MonodromyRep:
    """Ordered loops around the finite poles and their transport matrices."""

    base_point: complex
    pole_points: list
    loops: list
    matrices: list
    product_defect: float | None = None
    tol: float = DEFAULT_TOL

    def matrix_for_pole(self, p, tol=1e-6):
        for q, M in zip(self.pole_points, self.matrices):
            if abs(q - complex(p)) <= tol * max(1.0, abs(q)):
                return M
        raise KeyError(f"no loop around {p}")


def loop_ordering(pole_points, z0):
    """Indices sorted by increasing argument of ``t - z0``, ties by modulus."""
    def key(i):
        v = pole_points[i] - z0
        return (np.angle(v), abs(v))
    return sorted(range(len(pole_points)), key=key)


def monodromy_rep(conn, z0, tol=DEFAULT_TOL):
    """Keyhole monodromy generators around every finite pole.

    Loops are ordered by increasing argument from the base point; when the
    form is regular at infinity the ordered product ``M_l ... M_1`` is
    checked against the identity and the defect stored on the result.
    """
    z0 = complex(z0)
    poles = conn.all_finite_poles()
    for p in poles:
        if abs(z0 - p) <= 2 * TAU_SEP:
            raise PreconditionError(f"base point {z0} too close to pole {p}")
    order = loop_ordering(poles, z0)
    min_sep = np.inf
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            min_sep = min(min_sep, abs(poles[i] - poles[j]))
    clearance = 0.05 * min_sep if np.isfinite(min_sep) else \
        0.05 * min(abs(z0 - p) for p in poles)

    ordered_poles, loops, mats = [], [], []
    for i in order:
        t = poles[i]
        others = [abs(t - poles[j]) for j in range(len(poles)) if j != i]
        nearest = min(others) if others else abs(z0 - t)
        radius = min(0.25 * nearest, 0.5 * abs(z0 - t))
        loop = Path.keyhole(z0, t, radius, clearance)
        M = transport(conn, loop, tol)
        ordered_poles.append(t)
        loops.append(loop)
        mats.append(M)

    defect = None
    if conn.is_regular_at_infinity():
        prod = np.eye(conn.n, dtype=complex)
        for M in mats:
            prod = M @ prod
        defect = float(np.max(np.abs(prod - np.eye(conn.n))))
    return MonodromyRep(z0, ordered_poles, loops, mats, defect, tol)


def conjugacy_invariants(rep):
    """Flat list of conjugation invariants of the representation.

    Characteristic-polynomial coefficients of every loop matrix, then the
    traces of consecutive products ``M_i M_{i+1}``.
    """
    out = []
    for M in rep.matrices:
        out.extend(np.poly(M).astype(complex).tolist())
    for M1, M2 in zip(rep.matrices, rep.matrices[1:]):
        out.append(complex(np.trace(M1 @ M2)))
    return out
