"""Residue pairing, symplectic form, spectral Hamiltonians, Hamiltonian fields.

Two layers live here.

**Pairing layer** (pure formula evaluation on germs): the residue pairing of
twist variations against connection variations in either trivialization, and
the antisymmetric form

``omega((t1,s1,b1),(t2,s2,b2)) = <t1,b2> - <t2,b1> + res_D tr(s1 b2 - s2 b1)``

on tangent triples.

**Chart layer** (what the flows invert): at each pole the state carries the
frame jet and dressed polar jet of states.py, and the symplectic form in
these coordinates is the scaled cotangent-group form

``omega = 2 sum_i res_i tr( eta1 dLam2 - eta2 dLam1 + Lambda [eta1, eta2] )``

with ``eta = F^-1 dF`` the left jet velocity of the frame ``F = h (I + u)``.
The overall factor two matches the residue-pairing normalization above, so
that the Hamiltonian ``res tr(A^2)`` generates the classical commutator flow
on residues.  Hamiltonian vector fields are obtained by assembling the Gram
matrix of this form on the coordinate basis and solving ``omega(X, .) = dH``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import diagonalize_jet, spectral_quadratic
from .errors import DegenerateChartError, MalformedInputError, PreconditionError
from .ratfun import LaurentJet, RatMat, RatScalar
from .states import offdiag_indices

TAU_RANK = 1e-8
FD_STEP = 1e-5


# ---------------------------------------------------------------------------
# pairing layer
# ---------------------------------------------------------------------------

def _as_function_jet(a, point=0.0, pad_to=8):
    """Polynomial coefficient array -> exactly-known function jet."""
    if isinstance(a, LaurentJet):
        return a
    a = np.asarray(a, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    K = max(pad_to, a.shape[0])
    out = np.zeros((K,) + a.shape[1:], dtype=complex)
    out[: a.shape[0]] = a
    return LaurentJet(point, 0, out, 0)


def residue_pairing(a, b, T, frame="U1"):
    """Residue pairing of a twist variation against a connection variation.

    ``frame='U1'`` evaluates ``res tr(b T^-1 a)`` (twisted trivialization),
    ``frame='U0'`` evaluates ``res tr(b a)`` (ambient trivialization); both
    take germs at the site, in the respective frames.
    """
    a = _as_function_jet(a)
    if not isinstance(b, LaurentJet) or b.form_degree != 1:
        raise MalformedInputError("b must be a 1-form jet at the site")
    if frame == "U0":
        return complex((b * a).trace().residue())
    if frame == "U1":
        from .twist import TwistSite
        if isinstance(T, TwistSite):
            germ = T.germ
        else:
            germ = np.asarray(T, dtype=complex)
        from .ratfun import polymat_inverse_jet
        mu = germ.shape[0] * germ.shape[1]  # safe overestimate of det order
        Tinv = polymat_inverse_jet(germ, k_max=b.k_max + mu + 2)
        return complex((b * Tinv * a).trace().residue())
    raise MalformedInputError(f"unknown frame {frame!r}; use 'U0' or 'U1'")


@dataclass(frozen=True)
class TangentVec:
    """Tangent triple: twist variations, trivialization variations, and a
    global connection variation.

    ``t``: mapping site index -> function jet (variation of the site germ),
    ``s``: one coefficient array of shape ``(l_i, n, n)`` per pole (ascending
    jet orders ``0 .. l_i - 1``), ``b``: rational matrix 1-form with poles
    bounded by the divisor (plus twist sites when present).
    """

    s: tuple
    b: RatMat
    t: dict | None = None


def symplectic_form(X1, X2, state):
    """``<t1,b2> - <t2,b1> + res_D tr(s1 b2 - s2 b1)`` at the given state."""
    poles = [(p.t, p.l) for p in state.poles]
    if len(X1.s) != len(poles) or len(X2.s) != len(poles):
        raise PreconditionError("tangent s-data does not match the divisor")
    # accumulate the two halves separately so the swap is exactly a negation
    pos = 0.0 + 0j
    neg = 0.0 + 0j

    for (tpt, l), s1, s2 in zip(poles, X1.s, X2.s):
        b2 = X2.b.laurent(tpt, l - 1)
        b1 = X1.b.laurent(tpt, l - 1)
        for k in range(l):
            pos += np.trace(np.asarray(s1)[k] @ b2.coefficient(-1 - k))
            neg += np.trace(np.asarray(s2)[k] @ b1.coefficient(-1 - k))

    sites = state.twist.sites if state.twist is not None else ()
    for idx, site in enumerate(sites):
        t1 = (X1.t or {}).get(idx)
        t2 = (X2.t or {}).get(idx)
        if t1 is not None:
            pos += _twist_pairing(t1, X2.b, site)
        if t2 is not None:
            neg += _twist_pairing(t2, X1.b, site)
    return complex(pos - neg)


def _twist_pairing(t_germ, b, site):
    """``<t, b>`` with ``t`` a variation of the site germ and ``b`` global.

    In the ambient frame this is ``res tr(T^-1 b t)`` at the site.
    """
    t_jet = _as_function_jet(t_germ)
    mu = site.vanishing_order()
    k_hi = mu + 2
    Tinv = site.inverse_jet(k_hi)
    bjet = b.laurent(site.point, k_hi)
    bjet = LaurentJet(0.0, bjet.k_min, bjet.coeffs, 1)  # germ in site coords
    return complex((Tinv * bjet * t_jet).trace().residue())


# ---------------------------------------------------------------------------
# chart layer: per-pole basis blocks
# ---------------------------------------------------------------------------

class PoleChartBlock:
    """Symplectic data of one pole's chart coordinates.

    Basis order matches the chart slice: frame entries, off-diagonal jet
    entries order by order, then residue-momentum entries.  For every basis
    direction we store the left jet velocity ``eta = F^-1 dF`` (orders
    ``0 .. l-1``) and the dressed-residue variation.
    """

    def __init__(self, pole):
        self.pole = pole
        n, l = pole.n, pole.l
        self.n, self.l = n, l
        self.hinv = pole.h_inv()
        self.U = pole.unipotent_jet()
        self.V = pole.unipotent_inverse_jet()
        self.lam = pole.lam_jet()     # row r <-> order -(r+1)

        self.tags = []
        etas = []
        dlams = []
        for a in range(n):
            for b in range(n):
                self.tags.append(("h", a, b))
                W = np.outer(self.hinv[:, a], np.eye(n)[b])  # hinv @ E_ab
                eta = np.zeros((l, n, n), dtype=complex)
                for m in range(l):
                    for i in range(m + 1):
                        eta[m] += self.V[i] @ (W @ self.U[m - i])
                etas.append(eta)
                dlams.append(None)
        for k in range(max(l - 2, 0)):
            for a, b in offdiag_indices(n):
                self.tags.append(("u", k, a, b))
                eta = np.zeros((l, n, n), dtype=complex)
                E = np.zeros((n, n), dtype=complex)
                E[a, b] = 1.0
                for m in range(k + 1, l):
                    eta[m] = self.V[m - (k + 1)] @ E
                etas.append(eta)
                dlams.append(None)
        for a in range(n):
            for b in range(n):
                self.tags.append(("lam", a, b))
                etas.append(np.zeros((l, n, n), dtype=complex))
                E = np.zeros((n, n), dtype=complex)
                E[a, b] = 1.0
                dlams.append(E)
        self.etas = np.stack(etas)
        self.dlams = dlams
        self.dim = len(self.tags)

    def omega(self, x, y):
        """Chart form between two basis (or combined) directions."""
        eta_x, dl_x = x
        eta_y, dl_y = y
        acc = 0.0 + 0j
        if dl_y is not None:
            acc += np.trace(eta_x[0] @ dl_y)
        if dl_x is not None:
            acc -= np.trace(eta_y[0] @ dl_x)
        for m in range(self.l):
            comm = np.zeros((self.n, self.n), dtype=complex)
            for i in range(m + 1):
                comm += eta_x[i] @ eta_y[m - i] - eta_y[i] @ eta_x[m - i]
            acc += np.trace(self.lam[m] @ comm)
        return 2.0 * acc

    def gram_block(self):
        G = np.zeros((self.dim, self.dim), dtype=complex)
        for x in range(self.dim):
            ex = (self.etas[x], self.dlams[x])
            for y in range(x + 1, self.dim):
                val = self.omega(ex, (self.etas[y], self.dlams[y]))
                G[x, y] = val
                G[y, x] = -val
        return G

    def induced_variation(self, idx):
        """Connection polar-coefficient variations ``[dC_1 .. dC_l]`` of one
        basis direction, via ``dP = [F (ad_eta Lambda + dLam) F^-1]_polar``."""
        eta = self.etas[idx]
        dl = self.dlams[idx]
        n, l = self.n, self.l
        inner = np.zeros((l, n, n), dtype=complex)   # row k <-> order -(k+1)
        for m in range(l):
            for r in range(l):
                k = r - m  # order m - (r+1) = -(k+1)
                if 0 <= k < l:
                    inner[k] += eta[m] @ self.lam[r] - self.lam[r] @ eta[m]
        if dl is not None:
            inner[0] += dl
        out = []
        h = self.pole.h
        for k in range(1, l + 1):
            acc = np.zeros((n, n), dtype=complex)
            for r in range(k - 1, l):
                s = r + 1 - k
                for i in range(0, min(s, l - 1) + 1):
                    j = s - i
                    if j < l:
                        acc += self.U[i] @ inner[r] @ self.V[j]
            out.append(h @ acc @ self.hinv)
        return out


def chart_blocks(state):
    return [PoleChartBlock(p) for p in state.poles]


def gram_matrix(state, blocks=None):
    """Gram matrix of the chart symplectic form on the coordinate basis."""
    blocks = blocks if blocks is not None else chart_blocks(state)
    dim = sum(b.dim for b in blocks)
    G = np.zeros((dim, dim), dtype=complex)
    at = 0
    for b in blocks:
        G[at: at + b.dim, at: at + b.dim] = b.gram_block()
        at += b.dim
    return G


@dataclass
class ChartTangent:
    """Coordinate tangent, stored flat in the chart-vector layout."""

    vec: np.ndarray

    def flatten(self):
        return self.vec

    def induced_polar_variations(self, state, blocks=None):
        """Per-pole ``[dC_1 .. dC_l]`` connection-coefficient variations."""
        blocks = blocks if blocks is not None else chart_blocks(state)
        out = []
        at = 0
        for blk in blocks:
            var = [np.zeros((state.n, state.n), dtype=complex)
                   for _ in range(blk.l)]
            for idx in range(blk.dim):
                c = self.vec[at + idx]
                if c != 0:
                    dv = blk.induced_variation(idx)
                    for k in range(blk.l):
                        var[k] = var[k] + c * dv[k]
            out.append(var)
            at += blk.dim
        return out

    def as_tangent_vec(self, state, blocks=None):
        """Assemble the (s, b) tangent triple this coordinate tangent induces."""
        blocks = blocks if blocks is not None else chart_blocks(state)
        s = []
        b = RatMat.zero(state.n)
        at = 0
        for p, blk, var in zip(state.poles, blocks,
                               self.induced_polar_variations(state, blocks)):
            jet = np.zeros((p.l, state.n, state.n), dtype=complex)
            for idx in range(blk.dim):
                c = self.vec[at + idx]
                if c != 0:
                    jet += c * blk.etas[idx]
            s.append(jet)
            if any(np.any(v) for v in var):
                b = b + RatMat.from_polar_part(p.t, var)
            at += blk.dim
        return TangentVec(tuple(s), b)


def hamiltonian_vector_field(dH, state, blocks=None):
    """Solve ``omega(X, .) = dH`` on the chart; ``dH`` is the flat coefficient
    vector of the cotangent functional on the coordinate basis."""
    dH = np.asarray(dH, dtype=complex).ravel()
    G = gram_matrix(state, blocks)
    if dH.shape[0] != G.shape[0]:
        raise MalformedInputError("dH length does not match the chart dimension")
    # omega(X, Y) = X^T G Y on the basis, so omega(X, .) = dH reads G^T X = dH
    U, S, Vh = np.linalg.svd(G.T)
    if S[0] == 0.0 or S[-1] <= TAU_RANK * S[0]:
        raise DegenerateChartError(
            f"chart Gram matrix is singular: sigma_min/sigma_max = "
            f"{S[-1] / max(S[0], 1e-300):.3e}")
    x = Vh.conj().T @ ((U.conj().T @ dH) / S)
    return ChartTangent(x)


# ---------------------------------------------------------------------------
# deformation directions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeformationCocycle:
    """Vector-field germs ``m_i(zeta) d/dzeta`` near selected divisor poles.

    ``germs`` maps pole index to ``(k_min, coeffs)`` for the Laurent
    polynomial ``m(zeta) = sum coeffs[j] zeta**(k_min+j)``.  A pure unit
    translation of ``t_i`` is ``m_i = 1``.
    """

    germs: dict

    @classmethod
    def translation(cls, pole_index, rate=1.0):
        return cls({int(pole_index): (0, np.array([rate], dtype=complex))})

    def jet(self, pole_index, pad_to=4):
        k_min, coeffs = self.germs[pole_index]
        coeffs = np.asarray(coeffs, dtype=complex)
        K = max(pad_to, coeffs.shape[0])
        out = np.zeros(K, dtype=complex)
        out[: coeffs.shape[0]] = coeffs
        return LaurentJet(0.0, k_min, out, -1)


@dataclass(frozen=True)
class IrregularCotangent:
    """Diagonal truncated tail ``beta = sum_j beta_{-j} zeta**-j`` at a pole.

    ``coeffs`` has shape ``(l-1, n)``; row ``j`` holds the diagonal of the
    order ``-(j+1)`` term.
    """

    pole_index: int
    coeffs: np.ndarray

    def __init__(self, pole_index, coeffs):
        object.__setattr__(self, "pole_index", int(pole_index))
        object.__setattr__(self, "coeffs", np.asarray(coeffs, dtype=complex))


# ---------------------------------------------------------------------------
# fast polar-jet assembly (no rational algebra in inner loops)
# ---------------------------------------------------------------------------

def extension_jet(C, k, dist, m_max):
    """Taylor coefficients at orders 0..m_max of ``C/(zeta+dist)**k``."""
    out = np.zeros((m_max + 1,) + np.shape(C), dtype=complex)
    for m in range(m_max + 1):
        out[m] = C * ((-1) ** m * math.comb(k + m - 1, m)
                      * dist ** (-(k + m)))
    return out


def state_polar_coeffs(state):
    return [p.polar_coeffs() for p in state.poles]


def state_regular_jets(state, m_max, polar=None):
    """Regular Taylor coefficients (orders 0..m_max) of A at every pole."""
    polar = polar if polar is not None else state_polar_coeffs(state)
    n = state.n
    out = []
    for i, p in enumerate(state.poles):
        R = np.zeros((m_max + 1, n, n), dtype=complex)
        for j, q in enumerate(state.poles):
            if j == i:
                continue
            dist = p.t - q.t
            for k, C in enumerate(polar[j], start=1):
                R += extension_jet(C, k, dist, m_max)
        out.append(R)
    return out


def state_jet_at_pole(state, i, k_max, polar=None, regular=None):
    """Laurent jet of A at pole i from orders ``-l_i`` through ``k_max``."""
    p = state.poles[i]
    polar = polar if polar is not None else state_polar_coeffs(state)
    regular = regular if regular is not None else \
        state_regular_jets(state, max(k_max, 0), polar)
    n = state.n
    K = k_max + p.l + 1
    coeffs = np.zeros((K, n, n), dtype=complex)
    for k, C in enumerate(polar[i], start=1):
        coeffs[p.l - k] = C
    if k_max >= 0:
        coeffs[p.l:] = regular[i][: k_max + 1]
    return LaurentJet(p.t, -p.l, coeffs, 0)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def _q0_scalar(q, state):
    """The fixed fiberwise reference: polar parts of order >= 2 at each pole.

    Zero for Fuchsian states; otherwise the unique rational function with the
    same order >= 2 polar parts, poles only on the divisor, vanishing at the
    base point (infinity) to maximal order.
    """
    if all(p.l == 1 for p in state.poles):
        return RatScalar.zero()
    out = RatScalar.zero()
    for p in state.poles:
        jet = q.laurent(p.t, -2)
        for k in range(2, 2 * p.l + 1):
            c = jet.coefficient(-k)
            if c != 0:
                out = out + RatScalar.simple_pole(p.t, c, k)
    return out


def hamiltonian_mu_Q(mu, state, conn=None):
    """``sum_D res(mu . Q)``, ``Q = tr(A^2) - Q_0``, at the given state."""
    conn = conn if conn is not None else state.connection()
    q = spectral_quadratic(conn).q
    Q = q - _q0_scalar(q, state)
    acc = 0.0 + 0j
    for i in mu.germs:
        p = state.poles[i]
        mjet = mu.jet(i)
        k_need = -1 - mjet.k_min
        qjet = Q.laurent(p.t, max(k_need, 0))
        qjet = LaurentJet(p.t, qjet.k_min, qjet.coeffs, 2)
        mjet = LaurentJet(p.t, mjet.k_min, mjet.coeffs, -1)
        acc += complex((mjet * qjet).residue())
    return complex(acc)


def hamiltonian_beta_B(beta, state, pole_index=None):
    """``tr res_p (beta . B)`` with ``B`` the diagonal jet of A at the pole.

    Torus components follow the canonical branch order of the diagonal jet
    (lexicographic in the leading eigenvalues), so ``beta`` rows pair with
    the matching eigenvalue branches.
    """
    i = beta.pole_index if pole_index is None else pole_index
    p = state.poles[i]
    if p.l < 2:
        raise PreconditionError("irregular Hamiltonians need a pole of order >= 2")
    order = 2 * p.l - 2
    Ajet = state_jet_at_pole(state, i, order - p.l)
    pair = diagonalize_jet(Ajet, order, include_derivative=True)
    bd = pair.b_diag  # rows are orders -l .. l-2
    acc = 0.0 + 0j
    for k in range(p.l - 1):
        # beta row k is the order -(k+1) term; it pairs with B order k
        acc += np.sum(beta.coeffs[k] * bd[k + p.l])
    return complex(acc)


def translation_hamiltonian_values(state, polar=None, regular=None):
    """``res_{t_i} tr(A^2)`` for every pole, via the polar-jet fast path."""
    polar = polar if polar is not None else state_polar_coeffs(state)
    lmax = max(p.l for p in state.poles)
    regular = regular if regular is not None else \
        state_regular_jets(state, lmax - 1, polar)
    vals = []
    for i, p in enumerate(state.poles):
        acc = 0.0 + 0j
        for k in range(1, p.l + 1):
            acc += 2.0 * np.trace(polar[i][k - 1] @ regular[i][k - 1])
        vals.append(complex(acc))
    return vals


def d_translation_hamiltonian(state, i, blocks=None, polar=None, regular=None):
    """Analytic differential of ``res_{t_i} tr(A^2)`` on the chart basis.

    Uses ``dH(b) = 2 res_{t_i} tr(A b)`` with ``b`` the connection variation
    induced by each coordinate direction.
    """
    blocks = blocks if blocks is not None else chart_blocks(state)
    polar = polar if polar is not None else state_polar_coeffs(state)
    lmax = max(p.l for p in state.poles)
    regular = regular if regular is not None else \
        state_regular_jets(state, lmax - 1, polar)
    p_i = state.poles[i]

    def pair_with_variation(j, var):
        # 2 res_{t_i} tr(A . b) for b = sum_k var[k] (z-t_j)^-k
        acc = 0.0 + 0j
        if j == i:
            for k in range(1, len(var) + 1):
                acc += 2.0 * np.trace(regular[i][k - 1] @ var[k - 1])
        else:
            dist = p_i.t - state.poles[j].t
            for k, dC in enumerate(var, start=1):
                ext = extension_jet(dC, k, dist, p_i.l - 1)
                for m in range(p_i.l):
                    acc += 2.0 * np.trace(polar[i][m] @ ext[m])
        return acc

    out = np.zeros(state.chart_dim(), dtype=complex)
    at = 0
    for j, blk in enumerate(blocks):
        for idx in range(blk.dim):
            var = blk.induced_variation(idx)
            out[at + idx] = pair_with_variation(j, var)
        at += blk.dim
    return out


def numeric_differential(func, state, step=FD_STEP):
    """Central-difference differential of a scalar chart function.

    Everything in sight is holomorphic in the chart coordinates, so the
    derivative along the real direction of each complex coordinate is the
    complex derivative.
    """
    v0 = state.chart_vector()
    out = np.zeros_like(v0)
    for k in range(v0.shape[0]):
        vp = v0.copy()
        vp[k] += step
        vm = v0.copy()
        vm[k] -= step
        out[k] = (func(state.with_chart_vector(vp))
                  - func(state.with_chart_vector(vm))) / (2 * step)
    return out


def d_hamiltonian_mu_Q(mu, state):
    """Analytic chart differential of ``hamiltonian_mu_Q``.

    For translation germs this is the fast residue formula; general germs
    fall back to central differences of the exact rational evaluation.
    """
    is_translation = all(
        k_min == 0 and np.asarray(c).ravel().shape[0] == 1
        for k_min, c in mu.germs.values())
    if is_translation:
        out = np.zeros(state.chart_dim(), dtype=complex)
        blocks = chart_blocks(state)
        polar = state_polar_coeffs(state)
        lmax = max(p.l for p in state.poles)
        regular = state_regular_jets(state, lmax - 1, polar)
        for i, (_, c) in mu.germs.items():
            rate = complex(np.asarray(c).ravel()[0])
            out += rate * d_translation_hamiltonian(state, i, blocks,
                                                    polar, regular)
        return out
    return numeric_differential(lambda s: hamiltonian_mu_Q(mu, s), state)
