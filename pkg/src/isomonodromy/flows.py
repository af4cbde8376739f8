"""Monodromy-preserving deformation flows.

A flow direction prescribes rates for the base coordinates (pole positions
and irregular types).  Its action on a state decomposes as

* the reference lift: base coordinates move at the prescribed rates while
  every dressed polar coefficient is held constant in the flat ambient
  frame, and
* a Hamiltonian correction on the fiber chart, generated by the spectral
  Hamiltonians (residues of the quadratic trace form for position moves;
  the diagonal-jet pairing for irregular moves), obtained by inverting the
  chart symplectic form.

For position directions this reproduces the classical commutator equations
at simple poles and preserves monodromy at any pole order; for irregular
directions the decomposition is exact at order-2 poles (verified against
transported monodromy) and refused at higher orders, where the frozen-frame
lift is no longer the correct reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .connection import diagonalize_jet
from .errors import IntegrationAbort, MalformedInputError, PreconditionError
from .monodromy import SAFETY, monodromy_rep
from .states import ExtendedState, FlowState, N_MAX
from .symplectic import (
    IrregularCotangent,
    chart_blocks,
    d_translation_hamiltonian,
    hamiltonian_beta_B,
    hamiltonian_vector_field,
    numeric_differential,
    state_jet_at_pole,
    state_polar_coeffs,
    state_regular_jets,
    translation_hamiltonian_values,
)

TAU_COLLIDE = 1e-2
FLOW_TOL = 1e-10


# ---------------------------------------------------------------------------
# directions and derivatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Direction:
    """Rates on the base: ``dt_i/ds`` per pole and ``dLambda_irr/ds`` rows."""

    moduli_rates: dict          # pole index -> complex rate
    irregular_rates: dict       # pole index -> (l-1, n) complex array

    @classmethod
    def translation(cls, pole_index, rate=1.0):
        return cls({int(pole_index): complex(rate)}, {})

    @classmethod
    def irregular(cls, pole_index, rate_rows):
        return cls({}, {int(pole_index): np.asarray(rate_rows, dtype=complex)})

    def is_zero(self):
        return (all(r == 0 for r in self.moduli_rates.values())
                and all(not np.any(r) for r in self.irregular_rates.values()))


@dataclass
class StateDerivative:
    d_positions: np.ndarray     # (n_poles,)
    d_chart: np.ndarray         # (chart_dim,)
    d_irregular: list           # one (l-1, n) array per pole

    @classmethod
    def zero(cls, state):
        return cls(np.zeros(len(state.poles), dtype=complex),
                   np.zeros(state.chart_dim(), dtype=complex),
                   [np.zeros((p.l - 1, p.n), dtype=complex)
                    for p in state.poles])

    def add_chart(self, vec):
        self.d_chart = self.d_chart + vec
        return self


def lift_I0(direction, state):
    """Frozen-coefficient reference lift: base rates in, zero fiber motion.

    Positions move at the prescribed rates and the fixed diagonal irregular
    coefficients at theirs, while every dressed polar coefficient of the
    connection is carried along unchanged in the flat ambient frame.
    """
    out = StateDerivative.zero(state)
    for i, rate in direction.moduli_rates.items():
        out.d_positions[i] = rate
    for i, rows in direction.irregular_rates.items():
        p = state.poles[i]
        rows = np.asarray(rows, dtype=complex)
        if rows.shape != (p.l - 1, p.n):
            raise MalformedInputError(
                f"irregular rate shape {rows.shape} does not match pole of "
                f"order {p.l}")
        out.d_irregular[i] = rows
    return out


def beta_for_rate(rate_rows, pole):
    """The truncated tail dual to a prescribed irregular rate, in the sorted
    torus coordinates of the diagonal-jet pairing.

    Row ``j`` of the rate moves the order ``-(j+2)`` coefficient of the
    pole's diagonal data (components in state order); the tail with that
    differential has order ``-(j+1)`` entry ``-rate_j / (j+1)``, with
    components re-indexed to the lexicographic eigenvalue-branch order the
    diagonal jet uses.
    """
    rate_rows = np.asarray(rate_rows, dtype=complex)
    if not rate_rows.shape[0]:
        return rate_rows
    lead = pole.lam_irr[pole.l - 2]
    perm = np.lexsort((lead.imag, lead.real))
    return np.stack([-rate_rows[j][perm] / (j + 1)
                     for j in range(rate_rows.shape[0])])


def direction_differential(direction, state, blocks=None):
    """Chart differential of the correction Hamiltonian of a direction.

    Position rates contribute the analytic residue differentials of
    ``res tr(A^2)``; irregular rates contribute the differential of twice
    the diagonal-jet pairing (the chart form carries twice the canonical
    normalization, fixed once by the quadratic Hamiltonians).
    """
    blocks = blocks if blocks is not None else chart_blocks(state)
    dH = np.zeros(state.chart_dim(), dtype=complex)
    if direction.moduli_rates:
        polar = state_polar_coeffs(state)
        lmax = max(p.l for p in state.poles)
        regular = state_regular_jets(state, lmax - 1, polar)
        for i, rate in direction.moduli_rates.items():
            if rate != 0:
                dH += rate * d_translation_hamiltonian(state, i, blocks,
                                                       polar, regular)
    for i, rows in direction.irregular_rates.items():
        if not np.any(rows):
            continue
        p = state.poles[i]
        if p.l > 2:
            raise PreconditionError(
                "irregular deformation directions are supported at poles of "
                "order 2; the frozen-frame reference lift is not the correct "
                "decomposition at higher orders")
        beta = IrregularCotangent(i, beta_for_rate(rows, p))
        # the chart form carries twice the canonical normalization (fixed by
        # the quadratic Hamiltonians) and the linear diagonal-jet pairing
        # enters with the opposite orientation; both are pinned against the
        # transported-monodromy oracle
        dH += numeric_differential(
            lambda s: -2.0 * hamiltonian_beta_B(beta, s), state)
    return dH


def isomonodromic_rhs(direction, state, blocks=None):
    """Reference lift plus Hamiltonian correction for the given direction."""
    blocks = blocks if blocks is not None else chart_blocks(state)
    out = lift_I0(direction, state)
    if direction.is_zero():
        return out
    dH = direction_differential(direction, state, blocks)
    if np.any(dH):
        X = hamiltonian_vector_field(dH, state, blocks)
        out.add_chart(X.flatten())
    return out


# ---------------------------------------------------------------------------
# paths in the base
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowPath:
    """Parametrized curve of base data over ``s in [0, 1]``.

    ``positions(s)`` and ``irregular(s)`` give the base point; ``rates(s)``
    the corresponding direction.
    """

    positions: object
    irregular: object
    rates: object

    @classmethod
    def stationary(cls, state):
        pos0 = np.array(state.moduli.positions)
        irr0 = [np.array(r) for r in state.moduli.irregular]
        return cls(lambda s: pos0.copy(),
                   lambda s: [r.copy() for r in irr0],
                   lambda s: Direction({}, {}))

    @classmethod
    def pole_motion(cls, state, pole_index, curve, velocity):
        """Move one pole along ``curve(s)`` with ``d curve/ds = velocity(s)``."""
        pos0 = np.array(state.moduli.positions)
        irr0 = [np.array(r) for r in state.moduli.irregular]

        def positions(s):
            out = pos0.copy()
            out[pole_index] = curve(s)
            return out

        return cls(positions,
                   lambda s: [r.copy() for r in irr0],
                   lambda s: Direction({pole_index: velocity(s)}, {}))

    @classmethod
    def line(cls, state, pole_index, displacement):
        t0 = state.moduli.positions[pole_index]
        d = complex(displacement)
        return cls.pole_motion(state, pole_index,
                               lambda s: t0 + s * d, lambda s: d)

    @classmethod
    def semicircle(cls, state, pole_index, diameter, upper=True):
        """Half circle from ``t0`` to ``t0 + diameter`` (arc length ~ pi d/2)."""
        t0 = state.moduli.positions[pole_index]
        d = complex(diameter)
        c = t0 + d / 2
        sign = -1.0 if upper else 1.0

        def curve(s):
            return c - (d / 2) * np.exp(sign * 1j * np.pi * s)

        def velocity(s):
            return -(d / 2) * sign * 1j * np.pi * np.exp(sign * 1j * np.pi * s)

        return cls.pole_motion(state, pole_index, curve, velocity)

    @classmethod
    def irregular_line(cls, state, pole_index, rate_rows, length=1.0):
        pos0 = np.array(state.moduli.positions)
        irr0 = [np.array(r) for r in state.moduli.irregular]
        rate = np.asarray(rate_rows, dtype=complex)

        def irregular(s):
            out = [r.copy() for r in irr0]
            out[pole_index] = out[pole_index] + s * length * rate
            return out

        return cls(lambda s: pos0.copy(), irregular,
                   lambda s: Direction({}, {pole_index: length * rate}))


# ---------------------------------------------------------------------------
# flow integration
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    samples: list               # s values
    states: list                # FlowState at each sample
    status: str = "completed"   # or 'aborted'
    abort_kind: str | None = None
    abort_at: float | None = None


class _Abort(Exception):
    def __init__(self, kind, message):
        self.kind = kind
        self.message = message


def _pack(state):
    pos = np.array([p.t for p in state.poles])
    irr = [p.lam_irr.ravel() for p in state.poles]
    return np.concatenate([pos, state.chart_vector()] + irr)


def _unpack(vec, template):
    m = len(template.poles)
    pos = vec[:m]
    at = m + template.chart_dim()
    chart = vec[m:at]
    irr = []
    for p in template.poles:
        k = (p.l - 1) * p.n
        irr.append(vec[at:at + k].reshape(p.l - 1, p.n))
        at += k
    state = template.with_chart_vector(chart)
    state = FlowState(
        template.n,
        tuple(p.__class__(t, p.l, p2.h, p2.lam_res, r, p2.u)
              for t, r, p, p2 in zip(pos, irr, template.poles, state.poles)),
        template.twist)
    return state


def integrate_flow(state, path, tol=FLOW_TOL, n_samples=9):
    """Integrate the deformation along the path; sample the trajectory.

    Pole collisions and coefficient blow-ups abort with the partial
    trajectory flagged (``pole_collision`` / ``movable_singularity``).
    """
    svals = np.linspace(0.0, 1.0, n_samples)
    template = state

    def rhs(s, y):
        st = _unpack(y, template)
        if st.norm() > N_MAX:
            raise _Abort("movable_singularity",
                         f"coefficient norm exceeded {N_MAX:.1e} at s={s:.4f}")
        pos = [p.t for p in st.poles]
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if abs(pos[i] - pos[j]) < TAU_COLLIDE:
                    raise _Abort("pole_collision",
                                 f"poles {i} and {j} within {TAU_COLLIDE} "
                                 f"at s={s:.4f}")
        d = isomonodromic_rhs(path.rates(s), st)
        return np.concatenate([d.d_positions, d.d_chart]
                              + [r.ravel() for r in d.d_irregular])

    samples, states = [0.0], [state]
    y = _pack(state)
    for s0, s1 in zip(svals[:-1], svals[1:]):
        try:
            sol = solve_ivp(rhs, (s0, s1), y, method="DOP853",
                            rtol=SAFETY * tol, atol=SAFETY * tol)
        except _Abort as ab:
            return Trajectory(samples, states, "aborted", ab.kind, float(s0))
        if not sol.success:
            raise IntegrationAbort("stiffness",
                                   f"flow integration failed: {sol.message}")
        y = sol.y[:, -1]
        samples.append(float(s1))
        states.append(_unpack(y, template))
    return Trajectory(samples, states)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class DriftReport:
    samples: list
    invariants: np.ndarray        # (n_samples, k) conjugation invariants
    max_drift: float
    formal: list                  # per sample: list per pole of (l, n) diag orders -l..-1
    formal_residue_drift: float   # drift of the order -1 formal exponents
    base_point: complex
    notes: list = field(default_factory=list)


def auto_base_point(positions):
    """Deterministic base point below the pole cluster with clear rays."""
    pos = np.array(positions, dtype=complex)
    c = pos.mean()
    spread = max(1.0, float(max(abs(pos - c))) * 2.0)
    min_sep = min(abs(a - b) for i, a in enumerate(pos)
                  for b in pos[i + 1:]) if len(pos) > 1 else spread

    from .monodromy import LineSegment
    s2 = np.sqrt(0.5)
    directions = (-1j, 1j, -1.0, 1.0,
                  s2 * (-1 - 1j), s2 * (1 - 1j), s2 * (-1 + 1j), s2 * (1 + 1j))
    for mult in (1.5, 2.5, 4.0, 6.0):
        for direction in directions:
            z0 = c + direction * mult * spread
            ok = all(abs(z0 - p) > 0.3 * spread for p in pos)
            for i, t in enumerate(pos):
                seg = LineSegment(z0, t)
                for j, q in enumerate(pos):
                    if j != i and seg.distance_to(q) < 0.2 * min_sep:
                        ok = False
            if ok:
                return z0
    raise PreconditionError("no clear base point found for this configuration")


def formal_invariants(state, tol_order=None):
    """Diagonal jet data (orders -l .. -1) at every higher-order pole."""
    out = []
    for i, p in enumerate(state.poles):
        if p.l == 1:
            out.append(np.zeros((0, p.n), dtype=complex))
            continue
        Ajet = state_jet_at_pole(state, i, max(p.l - 2, 0))
        pair = diagonalize_jet(Ajet, 2 * p.l - 2, include_derivative=True)
        bd = pair.b_diag          # rows: orders -l .. l-2
        out.append(bd[: p.l])     # orders -l .. -1
    return out


def verify_isomonodromy(trajectory, tol=FLOW_TOL, base_point=None):
    """Transport-based drift report for a sampled trajectory.

    Conjugation invariants of the monodromy generators are computed with a
    single base point fixed across samples; per-pole characteristic
    polynomials are tracked by pole identity.  At higher-order poles the
    diagonal formal exponents ride along, and the drift of the order ``-1``
    exponents (never prescribed by a path) is reported separately.
    """
    if not trajectory.states:
        raise PreconditionError("empty trajectory")
    states = trajectory.states
    conn0 = states[0].connection()
    z0 = base_point if base_point is not None else \
        auto_base_point(conn0.all_finite_poles())

    inv_rows, formal_rows = [], []
    for k, st in enumerate(states):
        conn = conn0 if k == 0 else st.connection()
        rep = monodromy_rep(conn, z0, tol)
        chunks = []
        for p in st.poles:
            M = rep.matrix_for_pole(p.t)
            chunks.extend(np.poly(M).astype(complex).tolist())
        for M1, M2 in zip(rep.matrices, rep.matrices[1:]):
            chunks.append(complex(np.trace(M1 @ M2)))
        inv_rows.append(chunks)
        formal_rows.append(formal_invariants(st))

    inv = np.array(inv_rows)
    drift = float(np.max(np.abs(inv - inv[0]))) if inv.size else 0.0
    res_drift = 0.0
    for row in formal_rows:
        for i, bd in enumerate(row):
            if bd.shape[0]:
                base = formal_rows[0][i]
                res_drift = max(res_drift,
                                float(np.max(np.abs(bd[-1] - base[-1]))))
    notes = []
    if trajectory.status != "completed":
        notes.append(f"trajectory aborted: {trajectory.abort_kind}")
    return DriftReport(list(trajectory.samples), inv, drift,
                       formal_rows, res_drift, z0, notes)


# ---------------------------------------------------------------------------
# extended autonomous system
# ---------------------------------------------------------------------------

def section_S(state):
    """Section values: quadratic-differential slots and diagonal-jet slots.

    ``q_slots[i][m] = res(zeta^m Q)`` at pole i (zero for ``m >= 1`` under
    the fixed reference convention); ``b_slots[i]`` are the diagonal jet
    coefficients of orders ``0 .. l-2``.
    """
    vals = translation_hamiltonian_values(state)
    q_slots = []
    b_slots = []
    for i, p in enumerate(state.poles):
        q = np.zeros(p.l, dtype=complex)
        q[0] = vals[i]
        q_slots.append(q)
        if p.l == 1:
            b_slots.append(np.zeros((0, p.n), dtype=complex))
        else:
            Ajet = state_jet_at_pole(state, i, p.l - 2)
            pair = diagonalize_jet(Ajet, 2 * p.l - 2, include_derivative=True)
            b_slots.append(pair.b_diag[p.l: 2 * p.l - 1])   # orders 0..l-2
    return tuple(q_slots), tuple(b_slots)


def extend_state(state):
    q_slots, b_slots = section_S(state)
    return ExtendedState(state, q_slots, b_slots)


def _pairing_with_direction(q_slots, b_slots, direction):
    """``F_Y`` of slot data: the correction Hamiltonian the direction reads."""
    acc = 0.0 + 0j
    for i, rate in direction.moduli_rates.items():
        acc += rate * q_slots[i][0]
    for i, rows in direction.irregular_rates.items():
        beta = beta_for_rate(rows)
        for j in range(beta.shape[0]):
            acc += 2.0 * np.sum(beta[j] * b_slots[i][j])
    return complex(acc)


def extended_autonomous_rhs(direction, ext, fd_step=1e-6):
    """Hamiltonian dynamics of the autonomous system on the extended space.

    The state part is the isomonodromic field of the direction (base rates
    plus the fiber correction, here recovered from the section pairing); the
    dual variables move with the base-partial derivative of the section
    values along the direction.
    """
    state = ext.state
    blocks = chart_blocks(state)

    def fiber_H(st):
        q_slots, b_slots = section_S(st)
        return _pairing_with_direction(q_slots, b_slots, direction)

    out = lift_I0(direction, state)
    dH = numeric_differential(fiber_H, state, step=fd_step)
    if np.any(dH):
        out.add_chart(hamiltonian_vector_field(dH, state, blocks).flatten())

    # base-partial of the section values along the direction, fiber frozen
    def shifted(sign):
        pos = np.array([p.t for p in state.poles])
        irr = [np.array(p.lam_irr) for p in state.poles]
        for i, rate in direction.moduli_rates.items():
            pos[i] += sign * fd_step * rate
        for i, rows in direction.irregular_rates.items():
            irr[i] = irr[i] + sign * fd_step * np.asarray(rows)
        return state.with_positions(pos).with_irregular(irr)

    qp, bp = section_S(shifted(+1))
    qm, bm = section_S(shifted(-1))
    dq = tuple((a - b) / (2 * fd_step) for a, b in zip(qp, qm))
    db = tuple((a - b) / (2 * fd_step) for a, b in zip(bp, bm))
    return out, dq, db


def integrate_extended(ext, path, tol=FLOW_TOL, n_samples=9):
    """Integrate the autonomous system; returns sampled extended states."""
    state0 = ext.state
    m = len(state0.poles)

    def pack(e):
        parts = [_pack(e.state)]
        parts += [np.asarray(q).ravel() for q in e.q_dual]
        parts += [np.asarray(b).ravel() for b in e.b_dual]
        return np.concatenate(parts)

    def unpack(vec):
        base_len = m + state0.chart_dim() + sum(
            (p.l - 1) * p.n for p in state0.poles)
        st = _unpack(vec[:base_len], state0)
        at = base_len
        q_slots, b_slots = [], []
        for p in state0.poles:
            q_slots.append(vec[at:at + p.l].copy())
            at += p.l
        for p in state0.poles:
            k = (p.l - 1) * p.n
            b_slots.append(vec[at:at + k].reshape(p.l - 1, p.n).copy())
            at += k
        return ExtendedState(st, tuple(q_slots), tuple(b_slots))

    def rhs(s, y):
        e = unpack(y)
        if e.state.norm() > N_MAX:
            raise _Abort("movable_singularity", f"blow-up at s={s:.4f}")
        d, dq, db = extended_autonomous_rhs(path.rates(s), e)
        return np.concatenate(
            [d.d_positions, d.d_chart]
            + [r.ravel() for r in d.d_irregular]
            + [np.asarray(q).ravel() for q in dq]
            + [np.asarray(b).ravel() for b in db])

    svals = np.linspace(0.0, 1.0, n_samples)
    samples, out = [0.0], [ext]
    y = pack(ext)
    for s0, s1 in zip(svals[:-1], svals[1:]):
        try:
            sol = solve_ivp(rhs, (s0, s1), y, method="DOP853",
                            rtol=SAFETY * tol, atol=SAFETY * tol)
        except _Abort as ab:
            return samples, out, ("aborted", ab.kind)
        if not sol.success:
            raise IntegrationAbort("stiffness", sol.message)
        y = sol.y[:, -1]
        samples.append(float(s1))
        out.append(unpack(y))
    return samples, out, ("completed", None)
