"""Rational-function and Laurent-jet algebra over the complex numbers.

Conventions used throughout the library:

* Polynomials are numpy arrays of complex coefficients in **ascending** order
  (numpy.polynomial convention).
* A :class:`RatScalar` is ``num(z) / prod_j (z - r_j)**m_j`` with the
  denominator kept in factored form ``(root, multiplicity)``.  Keeping roots
  instead of expanded denominators makes residue and Laurent extraction
  exact-by-structure; root-finding only ever happens on *numerators* (division,
  matrix inversion), where it is unavoidable.
* The point at infinity is the sentinel :data:`INFINITY`; the chart there is
  ``w = 1/z`` with ``dz = -dw / w**2``.
* A "1-form" is a rational (or jet) coefficient of ``dz`` in the finite chart,
  of ``dw`` at infinity.  :class:`LaurentJet` carries ``form_degree``:
  0 for functions, 1 for 1-forms, 2 for quadratic differentials, -1 for
  vector-field germs ``m(z) d/dz``.  Multiplication adds form degrees.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as npoly

from .errors import MalformedInputError, PreconditionError

TAU_CANCEL = 1e-9     # numerator/denominator common-factor detection
TAU_ORACLE = 1e-10    # symbolic vs quadrature residue agreement
TAU_MERGE = 1e-12     # roots closer than this are the same pole

INFINITY = complex(float("inf"), 0.0)


def is_infinity(p) -> bool:
    if p is INFINITY:
        return True
    try:
        return not cmath.isfinite(complex(p))
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# polynomial helpers (ascending coefficient arrays)
# ---------------------------------------------------------------------------

def poly_trim(c, rel_tol=0.0):
    """Strip trailing coefficients that are negligible relative to the max."""
    c = np.atleast_1d(np.asarray(c, dtype=complex)).ravel()
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    k = c.size - 1
    while k > 0 and abs(c[k]) <= rel_tol * scale:
        k -= 1
    return c[: k + 1].copy()


def poly_shift(c, a):
    """Coefficients of ``p(x + a)`` given those of ``p`` (Taylor shift)."""
    c = np.asarray(c, dtype=complex)
    out = c.copy()
    n = out.size
    # repeated synthetic division by (x - (-a)) accumulates the Taylor
    # coefficients of p at a in place
    for i in range(n - 1):
        for k in range(n - 2, i - 1, -1):
            out[k] += a * out[k + 1]
    return out


def poly_factors(factors):
    """Expand ``prod (z - r)**m`` for a list of ``(root, mult)`` pairs."""
    c = np.ones(1, dtype=complex)
    for r, m in factors:
        for _ in range(m):
            c = npoly.polymul(c, np.array([-r, 1.0], dtype=complex))
    return c


def series_div(num, den, nterms):
    """Power-series division ``num/den`` to ``nterms`` terms; den[0] != 0."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    if den.size == 0 or den[0] == 0:
        raise MalformedInputError("series division by series with zero constant term")
    out = np.zeros(nterms, dtype=complex)
    d0 = den[0]
    for k in range(nterms):
        acc = num[k] if k < num.size else 0.0
        jmax = min(k, den.size - 1)
        for j in range(1, jmax + 1):
            acc -= den[j] * out[k - j]
        out[k] = acc / d0
    return out


def cluster_roots(coeffs, tol=1e-6):
    """Roots of a polynomial as ``(root, multiplicity)`` clusters.

    Multiple roots come out of ``np.roots`` as tight clusters; we merge
    within ``tol`` (absolute for roots inside the unit disk, relative
    outside) and use the cluster mean.
    """
    c = poly_trim(coeffs, rel_tol=1e-14)
    if c.size <= 1:
        return []
    roots = np.roots(c[::-1])
    roots = sorted(roots, key=lambda r: (r.real, r.imag))
    clusters = []
    for r in roots:
        placed = False
        for i, (center, mult) in enumerate(clusters):
            if abs(r - center) <= tol * max(1.0, abs(center)):
                clusters[i] = ((center * mult + r) / (mult + 1), mult + 1)
                placed = True
                break
        if not placed:
            clusters.append((r, 1))
    return [(complex(c0), m) for c0, m in clusters]


# ---------------------------------------------------------------------------
# Laurent jets
# ---------------------------------------------------------------------------

class LaurentJet:
    """Finitely many Laurent coefficients of a local expansion.

    Coefficients are known on ``[k_min, k_max]``; below ``k_min`` they are
    exact zeros (``k_min`` is a true lower bound on the order), above
    ``k_max`` they are *unknown*, not zero.  Arithmetic tracks the reliable
    range.  ``coeffs`` has shape ``(K,)`` for scalar jets or ``(K, n, n)``
    for matrix jets, ``K = k_max - k_min + 1``.
    """

    __slots__ = ("point", "k_min", "coeffs", "form_degree")

    def __init__(self, point, k_min, coeffs, form_degree=0):
        self.point = point
        self.k_min = int(k_min)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim not in (1, 3):
            raise MalformedInputError("jet coefficients must be (K,) or (K, n, n)")
        self.form_degree = int(form_degree)

    # -- basic structure ----------------------------------------------------

    @property
    def k_max(self):
        return self.k_min + self.coeffs.shape[0] - 1

    @property
    def is_matrix(self):
        return self.coeffs.ndim == 3

    @property
    def is_form(self):
        return self.form_degree == 1

    @property
    def n(self):
        return self.coeffs.shape[1] if self.is_matrix else 1

    @classmethod
    def zero(cls, point, k_min, k_max, n=None, form_degree=0):
        shape = (k_max - k_min + 1,) if n is None else (k_max - k_min + 1, n, n)
        return cls(point, k_min, np.zeros(shape, dtype=complex), form_degree)

    @classmethod
    def identity(cls, point, k_max, n, form_degree=0):
        c = np.zeros((k_max + 1, n, n), dtype=complex)
        c[0] = np.eye(n)
        return cls(point, 0, c, form_degree)

    def coefficient(self, k):
        """Coefficient of order ``k``; exact zero below k_min, error above k_max."""
        if k < self.k_min:
            shape = self.coeffs.shape[1:]
            return np.zeros(shape, dtype=complex) if shape else 0.0 + 0j
        if k > self.k_max:
            raise PreconditionError(
                f"coefficient of order {k} beyond jet truncation {self.k_max}")
        return self.coeffs[k - self.k_min]

    def truncate(self, k_max):
        if k_max > self.k_max:
            raise PreconditionError("cannot extend a jet by truncation")
        return LaurentJet(self.point, self.k_min,
                          self.coeffs[: k_max - self.k_min + 1], self.form_degree)

    def drop_leading_zeros(self, rel_tol=1e-13):
        """Raise k_min past coefficients that are numerically zero."""
        scale = np.max(np.abs(self.coeffs)) if self.coeffs.size else 0.0
        if scale == 0.0:
            return self
        i = 0
        flat = self.coeffs.reshape(self.coeffs.shape[0], -1)
        while i < flat.shape[0] - 1 and np.max(np.abs(flat[i])) <= rel_tol * scale:
            i += 1
        return LaurentJet(self.point, self.k_min + i, self.coeffs[i:], self.form_degree)

    def shift_orders(self, d):
        """Multiply by ``zeta**d`` (shifts all orders by d)."""
        return LaurentJet(self.point, self.k_min + d, self.coeffs, self.form_degree)

    # -- ring operations ----------------------------------------------------

    def _check_point(self, other):
        if is_infinity(self.point) != is_infinity(other.point) or (
                not is_infinity(self.point) and self.point != other.point):
            raise MalformedInputError("jets expanded at different points")

    def __add__(self, other):
        if not isinstance(other, LaurentJet):
            return NotImplemented
        self._check_point(other)
        if self.form_degree != other.form_degree:
            raise MalformedInputError("adding jets of different form degree")
        k_min = min(self.k_min, other.k_min)
        k_max = min(self.k_max, other.k_max)
        if k_max < k_min:
            raise PreconditionError("jet ranges do not overlap")
        a, b = self, other
        if a.is_matrix != b.is_matrix:
            raise MalformedInputError("adding scalar and matrix jets")
        shape = ((k_max - k_min + 1,) if not a.is_matrix
                 else (k_max - k_min + 1, a.n, a.n))
        out = np.zeros(shape, dtype=complex)
        for jet in (a, b):
            lo = jet.k_min - k_min
            hi = min(jet.k_max, k_max) - k_min
            out[lo:hi + 1] += jet.coeffs[: hi - lo + 1]
        return LaurentJet(self.point, k_min, out, self.form_degree)

    def __neg__(self):
        return LaurentJet(self.point, self.k_min, -self.coeffs, self.form_degree)

    def __sub__(self, other):
        if not isinstance(other, LaurentJet):
            return NotImplemented
        return self.__add__(-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return LaurentJet(self.point, self.k_min, self.coeffs * other,
                              self.form_degree)
        if not isinstance(other, LaurentJet):
            return NotImplemented
        self._check_point(other)
        a, b = self, other
        k_min = a.k_min + b.k_min
        k_max = min(a.k_max + b.k_min, b.k_max + a.k_min)
        K = k_max - k_min + 1
        if K <= 0:
            raise PreconditionError("jet product has empty reliable range")
        if a.is_matrix and b.is_matrix:
            out = np.zeros((K, a.n, a.n), dtype=complex)
            for i in range(a.coeffs.shape[0]):
                for j in range(b.coeffs.shape[0]):
                    k = a.k_min + i + b.k_min + j - k_min
                    if 0 <= k < K:
                        out[k] += a.coeffs[i] @ b.coeffs[j]
        else:
            if a.is_matrix or b.is_matrix:
                mat, sca = (a, b) if a.is_matrix else (b, a)
                out = np.zeros((K, mat.n, mat.n), dtype=complex)
                for i in range(mat.coeffs.shape[0]):
                    for j in range(sca.coeffs.shape[0]):
                        k = mat.k_min + i + sca.k_min + j - k_min
                        if 0 <= k < K:
                            out[k] += mat.coeffs[i] * sca.coeffs[j]
            else:
                out = np.zeros(K, dtype=complex)
                for i in range(a.coeffs.shape[0]):
                    for j in range(b.coeffs.shape[0]):
                        k = a.k_min + i + b.k_min + j - k_min
                        if 0 <= k < K:
                            out[k] += a.coeffs[i] * b.coeffs[j]
        return LaurentJet(self.point, k_min, out,
                          self.form_degree + other.form_degree)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.__mul__(other)
        return NotImplemented

    # -- calculus -----------------------------------------------------------

    def derivative(self, as_form=False):
        """d/d(local coordinate).  ``as_form=True`` returns a 1-form jet."""
        if self.form_degree != 0:
            raise MalformedInputError("derivative is defined for function jets")
        ks = np.arange(self.k_min, self.k_max + 1, dtype=complex)
        if self.is_matrix:
            out = self.coeffs * ks[:, None, None]
        else:
            out = self.coeffs * ks
        return LaurentJet(self.point, self.k_min - 1, out,
                          1 if as_form else 0)

    def residue(self):
        """Coefficient of order -1; requires a 1-form jet."""
        if self.form_degree != 1:
            raise MalformedInputError("residue is defined for 1-form jets")
        return self.coefficient(-1)

    def trace(self):
        if not self.is_matrix:
            raise MalformedInputError("trace of a scalar jet")
        return LaurentJet(self.point, self.k_min,
                          np.trace(self.coeffs, axis1=1, axis2=2),
                          self.form_degree)

    def transpose_entry(self, i, j):
        """Scalar jet of entry (i, j)."""
        return LaurentJet(self.point, self.k_min, self.coeffs[:, i, j],
                          self.form_degree)

    def diagonal(self):
        return LaurentJet(self.point, self.k_min,
                          np.einsum("kii->ki", self.coeffs).copy(),
                          self.form_degree)

    def inverse(self):
        """Multiplicative inverse of a jet with invertible leading coefficient.

        Scalar jets may open with exact zeros (the true order is detected);
        matrix jets need an invertible coefficient at the detected order.
        For germs with singular-but-nonzero leading matrix use
        :func:`polymat_inverse_jet`.
        """
        jet = self.drop_leading_zeros()
        mu = jet.k_min
        c = jet.coeffs
        K = c.shape[0]
        if self.is_matrix:
            c0inv = np.linalg.inv(c[0])
            out = np.zeros_like(c)
            out[0] = c0inv
            for m in range(1, K):
                acc = np.zeros_like(c[0])
                for j in range(1, m + 1):
                    acc += c[j] @ out[m - j]
                out[m] = -c0inv @ acc
        else:
            if c[0] == 0:
                raise MalformedInputError("jet is numerically zero; cannot invert")
            out = series_div(np.array([1.0 + 0j]), c, K)
        return LaurentJet(self.point, -mu, out, -self.form_degree)

    def __repr__(self):
        kind = {0: "fn", 1: "form", 2: "quad", -1: "vec"}.get(
            self.form_degree, f"deg{self.form_degree}")
        pt = "inf" if is_infinity(self.point) else f"{self.point:.4g}"
        return (f"LaurentJet({kind} at {pt}, orders {self.k_min}..{self.k_max}, "
                f"n={self.n if self.is_matrix else 'scalar'})")


# ---------------------------------------------------------------------------
# rational scalars
# ---------------------------------------------------------------------------

class RatScalar:
    """Rational function ``num(z) / prod (z - r_j)**m_j``.

    Common factors between numerator and denominator are cancelled on
    construction (within ``TAU_CANCEL``), so stored pole orders are true
    orders.
    """

    __slots__ = ("num", "poles")

    def __init__(self, num, poles=(), _skip_cancel=False):
        num = poly_trim(num, rel_tol=0.0)
        merged = []
        for r, m in poles:
            r = complex(r)
            m = int(m)
            if m <= 0:
                raise MalformedInputError("pole multiplicities must be positive")
            for i, (r0, m0) in enumerate(merged):
                if abs(r - r0) <= TAU_MERGE * max(1.0, abs(r0)):
                    merged[i] = (r0, m0 + m)
                    break
            else:
                merged.append((r, m))
        if not _skip_cancel:
            num, merged = _cancel(num, merged)
        self.num = num
        self.poles = tuple(sorted(merged, key=lambda rm: (rm[0].real, rm[0].imag)))

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls(np.zeros(1, dtype=complex))

    @classmethod
    def const(cls, c):
        return cls(np.array([c], dtype=complex))

    @classmethod
    def from_poly(cls, coeffs):
        return cls(coeffs)

    @classmethod
    def monomial(cls, k, c=1.0):
        coeffs = np.zeros(k + 1, dtype=complex)
        coeffs[k] = c
        return cls(coeffs)

    @classmethod
    def simple_pole(cls, p, c=1.0, order=1):
        """``c / (z - p)**order``."""
        return cls(np.array([c], dtype=complex), [(p, order)])

    # -- structure ------------------------------------------------------------

    def is_zero(self, tol=0.0):
        return bool(np.all(np.abs(self.num) <= tol))

    def pole_order(self, p):
        """Order of the pole at p (0 if regular); p may be INFINITY."""
        if is_infinity(p):
            deg_num = self.num.size - 1
            deg_den = sum(m for _, m in self.poles)
            return max(0, deg_num - deg_den)
        for r, m in self.poles:
            if abs(complex(p) - r) <= TAU_CANCEL * max(1.0, abs(r)):
                return m
        return 0

    def pole_points(self):
        return [r for r, _ in self.poles]

    def denominator_poly(self):
        return poly_factors(self.poles)

    # -- evaluation -----------------------------------------------------------

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        val = npoly.polyval(z, self.num)
        for r, m in self.poles:
            val = val / (z - r) ** m
        return val if val.shape else complex(val)

    # -- arithmetic -----------------------------------------------------------

    def _match_pole(self, r):
        for r0, m0 in self.poles:
            if abs(r - r0) <= TAU_MERGE * max(1.0, abs(r0)):
                return r0, m0
        return None

    def __add__(self, other):
        other = _as_ratscalar(other)
        if other is NotImplemented:
            return NotImplemented
        union = {}
        for r, m in self.poles + other.poles:
            key = self._key_for(union, r)
            union[key] = max(union.get(key, 0), self._mult_in(self, key),
                             self._mult_in(other, key))
        common = list(union.items())
        cof_a = poly_factors([(r, m - self._mult_in(self, r)) for r, m in common])
        cof_b = poly_factors([(r, m - self._mult_in(other, r)) for r, m in common])
        num = npoly.polyadd(npoly.polymul(self.num, cof_a),
                            npoly.polymul(other.num, cof_b))
        return RatScalar(num, common)

    @staticmethod
    def _key_for(union, r):
        for key in union:
            if abs(key - r) <= TAU_MERGE * max(1.0, abs(key)):
                return key
        return complex(r)

    @staticmethod
    def _mult_in(f, r):
        for r0, m0 in f.poles:
            if abs(r0 - r) <= TAU_MERGE * max(1.0, abs(r0)):
                return m0
        return 0

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return RatScalar(-self.num, self.poles, _skip_cancel=True)

    def __sub__(self, other):
        other = _as_ratscalar(other)
        if other is NotImplemented:
            return NotImplemented
        return self.__add__(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return RatScalar.zero()
            return RatScalar(self.num * other, self.poles, _skip_cancel=True)
        if not isinstance(other, RatScalar):
            return NotImplemented
        poles = list(self.poles)
        for r, m in other.poles:
            for i, (r0, m0) in enumerate(poles):
                if abs(r - r0) <= TAU_MERGE * max(1.0, abs(r0)):
                    poles[i] = (r0, m0 + m)
                    break
            else:
                poles.append((r, m))
        return RatScalar(npoly.polymul(self.num, other.num), poles)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.__mul__(other)
        return NotImplemented

    def reciprocal(self):
        if self.is_zero():
            raise ZeroDivisionError("reciprocal of the zero rational function")
        new_poles = cluster_roots(self.num)
        lead = self.num[-1]
        return RatScalar(poly_factors(self.poles) / lead, new_poles)

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.__mul__(1.0 / other)
        if not isinstance(other, RatScalar):
            return NotImplemented
        return self.__mul__(other.reciprocal())

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = RatScalar.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self):
        """d/dz, exact-by-structure (no root finding)."""
        if not self.poles:
            if self.num.size == 1:
                return RatScalar.zero()
            return RatScalar(npoly.polyder(self.num))
        # f = n / prod (z-r)^m  ->  f' over prod (z-r)^(m+1)
        full = poly_factors([(r, 1) for r, _ in self.poles])
        term = npoly.polymul(npoly.polyder(self.num), full)
        for j, (rj, mj) in enumerate(self.poles):
            rest = poly_factors([(r, 1) for i, (r, _) in enumerate(self.poles)
                                 if i != j])
            term = npoly.polysub(term, mj * npoly.polymul(self.num, rest))
        return RatScalar(term, [(r, m + 1) for r, m in self.poles])

    # -- local expansions -------------------------------------------------------

    def at_infinity(self):
        """The substitution ``f(1/w)`` as a RatScalar in the w chart."""
        d = self.num.size - 1
        M = sum(m for _, m in self.poles)
        rev_num = self.num[::-1].copy()
        scale = 1.0 + 0j
        new_poles = []
        for r, m in self.poles:
            if abs(r) <= TAU_MERGE:
                continue  # factor (1/w - 0)^m = w^-m, handled by exponent below
            scale *= (-r) ** m
            new_poles.append((1.0 / r, m))
        e = M - d
        num = rev_num / scale
        if e >= 0:
            num = npoly.polymul(num, RatScalar.monomial(e).num) if e else num
        else:
            new_poles.append((0.0 + 0j, -e))
        return RatScalar(num, new_poles)

    def laurent(self, p, k_max):
        """Laurent jet at ``p`` (finite or INFINITY) through order ``k_max``.

        At infinity the jet is in the local coordinate ``w = 1/z``.
        """
        if is_infinity(p):
            return self.at_infinity().laurent(0.0, k_max)
        p = complex(p)
        hits = [(r, m) for r, m in self.poles
                if abs(p - r) <= TAU_CANCEL * max(1.0, abs(r))]
        if len(hits) > 1:
            raise MalformedInputError(
                f"ambiguous expansion point {p}: several denominator roots "
                f"coincide within tolerance with inconsistent multiplicities")
        m = hits[0][1] if hits else 0
        center = hits[0][0] if hits else p
        rest = [(r, mm) for r, mm in self.poles if not hits or r != hits[0][0]]
        nterms = k_max + m + 1
        if nterms <= 0:
            return LaurentJet(p, -m, np.zeros(0, dtype=complex), 0)
        num_t = poly_shift(self.num, center)
        den_t = poly_shift(poly_factors(rest), center)
        series = series_div(num_t, den_t, nterms)
        return LaurentJet(p, -m, series, 0)

    def partial_fractions(self):
        """Decompose into polar terms and a polynomial part.

        Returns ``(terms, poly)`` where ``terms`` is a list of
        ``(pole, order, coefficient)`` meaning ``coefficient/(z-pole)**order``
        and ``poly`` are ascending coefficients of the polynomial part.
        """
        terms = []
        for r, m in self.poles:
            jet = self.laurent(r, -1)
            for k in range(-m, 0):
                c = jet.coefficient(k)
                if c != 0:
                    terms.append((r, -k, complex(c)))
        den = poly_factors(self.poles)
        if self.num.size >= den.size:
            quot, _ = npoly.polydiv(self.num, den)
            quot = poly_trim(quot, rel_tol=1e-14)
        else:
            quot = np.zeros(1, dtype=complex)
        return terms, quot

    @classmethod
    def from_partial_fractions(cls, terms, poly=None):
        out = cls(poly if poly is not None else np.zeros(1, dtype=complex))
        for p, order, c in terms:
            out = out + cls.simple_pole(p, c, order)
        return out

    def __repr__(self):
        return f"RatScalar(deg_num={self.num.size - 1}, poles={self.poles})"


def _cancel(num, poles):
    """Deflate numerator factors that coincide with denominator roots."""
    num = poly_trim(num, rel_tol=0.0)
    out = []
    for r, m in poles:
        while m > 0 and num.size > 1:
            powers = np.abs(np.array([max(1.0, abs(r)) ** k
                                      for k in range(num.size)]))
            scale = float(np.sum(np.abs(num) * powers))
            if scale == 0.0 or abs(npoly.polyval(r, num)) > TAU_CANCEL * scale:
                break
            num = _deflate(num, r)
            m -= 1
        if np.all(num == 0):
            m = 0
        if m > 0:
            out.append((r, m))
    if np.all(np.abs(num) == 0):
        out = []
        num = np.zeros(1, dtype=complex)
    return poly_trim(num, rel_tol=0.0), out


def _deflate(c, r):
    """Synthetic division of p by (z - r); remainder discarded."""
    n = c.size - 1
    out = np.zeros(n, dtype=complex)
    acc = c[n]
    for k in range(n - 1, -1, -1):
        out[k] = acc
        acc = c[k] + r * acc
    return out


def _as_ratscalar(x):
    if isinstance(x, RatScalar):
        return x
    if isinstance(x, (int, float, complex)):
        return RatScalar.const(x)
    return NotImplemented


# ---------------------------------------------------------------------------
# rational matrices
# ---------------------------------------------------------------------------

class RatMat:
    """n x n matrix of :class:`RatScalar`, all sharing the ambient coordinate."""

    __slots__ = ("entries", "n")

    def __init__(self, entries):
        self.entries = [[_require(e) for e in row] for row in entries]
        self.n = len(self.entries)
        for row in self.entries:
            if len(row) != self.n:
                raise MalformedInputError("RatMat must be square")

    @classmethod
    def zero(cls, n):
        return cls([[RatScalar.zero() for _ in range(n)] for _ in range(n)])

    @classmethod
    def identity(cls, n):
        return cls([[RatScalar.const(1.0 if i == j else 0.0)
                     for j in range(n)] for i in range(n)])

    @classmethod
    def from_constant(cls, M):
        M = np.asarray(M, dtype=complex)
        return cls([[RatScalar.const(M[i, j]) for j in range(M.shape[1])]
                    for i in range(M.shape[0])])

    @classmethod
    def from_scalar(cls, f, n=1):
        out = cls.zero(n)
        for i in range(n):
            out.entries[i][i] = f
        return out

    @classmethod
    def from_polar_part(cls, p, coeff_list):
        """``sum_k C_k / (z - p)**k`` for ``coeff_list = [C_1, C_2, ...]``."""
        coeff_list = [np.asarray(C, dtype=complex) for C in coeff_list]
        n = coeff_list[0].shape[0]
        out = cls.zero(n)
        for k, C in enumerate(coeff_list, start=1):
            for i in range(n):
                for j in range(n):
                    if C[i, j] != 0:
                        out.entries[i][j] = out.entries[i][j] + \
                            RatScalar.simple_pole(p, C[i, j], k)
        return out

    @classmethod
    def from_poly_matrix(cls, coeffs, center=0.0):
        """Polynomial matrix ``sum_k M_k (z - center)**k`` as a RatMat in z."""
        coeffs = np.asarray(coeffs, dtype=complex)
        n = coeffs.shape[1]
        out = cls.zero(n)
        for i in range(n):
            for j in range(n):
                c = poly_shift(coeffs[:, i, j], -center) if center != 0 \
                    else coeffs[:, i, j]
                out.entries[i][j] = RatScalar(c)
        return out

    # -- structure ------------------------------------------------------------

    def pole_points(self):
        pts = []
        for row in self.entries:
            for e in row:
                for r, _ in e.poles:
                    if not any(abs(r - q) <= TAU_MERGE * max(1.0, abs(q))
                               for q in pts):
                        pts.append(r)
        return pts

    def pole_order(self, p):
        return max(e.pole_order(p) for row in self.entries for e in row)

    def is_zero(self, tol=0.0):
        return all(e.is_zero(tol) for row in self.entries for e in row)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, RatMat):
            return NotImplemented
        return RatMat([[self.entries[i][j] + other.entries[i][j]
                        for j in range(self.n)] for i in range(self.n)])

    def __sub__(self, other):
        if not isinstance(other, RatMat):
            return NotImplemented
        return RatMat([[self.entries[i][j] - other.entries[i][j]
                        for j in range(self.n)] for i in range(self.n)])

    def __neg__(self):
        return RatMat([[-e for e in row] for row in self.entries])

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, RatScalar)):
            return RatMat([[e * other for e in row] for row in self.entries])
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        if not isinstance(other, RatMat):
            return NotImplemented
        out = RatMat.zero(self.n)
        for i in range(self.n):
            for j in range(self.n):
                acc = RatScalar.zero()
                for k in range(self.n):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                out.entries[i][j] = acc
        return out

    def trace(self):
        acc = RatScalar.zero()
        for i in range(self.n):
            acc = acc + self.entries[i][i]
        return acc

    def derivative(self):
        return RatMat([[e.derivative() for e in row] for row in self.entries])

    def det(self):
        return _ratmat_det([[self.entries[i][j] for j in range(self.n)]
                            for i in range(self.n)])

    def adjugate(self):
        n = self.n
        if n == 1:
            return RatMat([[RatScalar.const(1.0)]])
        out = RatMat.zero(n)
        for i in range(n):
            for j in range(n):
                minor = [[self.entries[r][c] for c in range(n) if c != j]
                         for r in range(n) if r != i]
                sign = -1.0 if (i + j) % 2 else 1.0
                out.entries[j][i] = _ratmat_det(minor) * sign
        return out

    def inverse(self):
        d = self.det()
        if d.is_zero():
            raise MalformedInputError("matrix is identically singular")
        dinv = d.reciprocal()
        return self.adjugate() * dinv

    # -- evaluation and expansions ---------------------------------------------

    def eval(self, z):
        return np.array([[complex(e(z)) for e in row] for row in self.entries])

    def laurent(self, p, k_max):
        jets = [[e.laurent(p, k_max) for e in row] for row in self.entries]
        k_min = min(j.k_min for row in jets for j in row)
        K = k_max - k_min + 1
        out = np.zeros((K, self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(self.n):
                jet = jets[i][j]
                lo = jet.k_min - k_min
                out[lo:lo + jet.coeffs.shape[0], i, j] = jet.coeffs[:K - lo]
        return LaurentJet(p if not is_infinity(p) else INFINITY, k_min, out, 0)

    def residue(self, p):
        """Matrix residue of this RatMat viewed as the dz coefficient of a 1-form."""
        return residue(self, p)

    def __repr__(self):
        return f"RatMat(n={self.n}, poles={self.pole_points()})"


def _require(e):
    if isinstance(e, RatScalar):
        return e
    if isinstance(e, (int, float, complex)):
        return RatScalar.const(e)
    raise MalformedInputError(f"cannot use {type(e)} as a RatMat entry")


def _ratmat_det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = RatScalar.zero()
    for j in range(n):
        minor = [[rows[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = rows[0][j] * _ratmat_det(minor)
        acc = acc + (term if j % 2 == 0 else -term)
    return acc


# ---------------------------------------------------------------------------
# residues of 1-forms
# ---------------------------------------------------------------------------

def form_at_infinity(f):
    """w-chart dw coefficient of the 1-form ``f dz``: ``-f(1/w)/w**2``."""
    if isinstance(f, RatMat):
        return RatMat([[form_at_infinity(e) for e in row] for row in f.entries])
    g = f.at_infinity() * (-1.0)
    return g * RatScalar(np.array([1.0 + 0j]), [(0.0 + 0j, 2)])


def residue(omega, p):
    """Residue at ``p`` of the 1-form ``omega dz`` (``omega`` rational).

    ``p`` may be finite or INFINITY; a regular point gives zero.  Matrix
    input gives the entrywise (matrix) residue.
    """
    if isinstance(omega, RatMat):
        return np.array([[residue(e, p) for e in row] for row in omega.entries])
    if is_infinity(p):
        return complex(form_at_infinity(omega).laurent(0.0, -1).coefficient(-1))
    jet = omega.laurent(p, -1)
    return complex(jet.coefficient(-1))


def residue_sum_all_poles(omega):
    """Sum of residues over every pole including infinity (should be ~0)."""
    if isinstance(omega, RatMat):
        pts = omega.pole_points()
        acc = sum(residue(omega, p) for p in pts) if pts else np.zeros(
            (omega.n, omega.n), dtype=complex)
        return acc + residue(omega, INFINITY)
    acc = sum((residue(omega, r) for r, _ in omega.poles), 0.0 + 0j)
    return acc + residue(omega, INFINITY)


def residue_quadrature_oracle(omega, p, radius, N=128):
    """Residue by trapezoid quadrature of ``omega dz`` on a circle around p.

    Independent of the symbolic path: only pointwise evaluation is used.
    The circle must enclose no pole other than p itself.
    """
    if is_infinity(p):
        raise PreconditionError("quadrature oracle is defined at finite points")
    p = complex(p)
    pts = omega.pole_points() if isinstance(omega, RatMat) else \
        [r for r, _ in omega.poles]
    for q in pts:
        if abs(q - p) > TAU_MERGE * max(1.0, abs(p)) and abs(q - p) <= radius:
            raise PreconditionError(
                f"pole at {q} inside or on the quadrature circle around {p}")
    theta = 2.0 * np.pi * np.arange(N) / N
    nodes = p + radius * np.exp(1j * theta)
    w = radius * np.exp(1j * theta) / N
    if isinstance(omega, RatMat):
        acc = np.zeros((omega.n, omega.n), dtype=complex)
        for zk, wk in zip(nodes, w):
            acc += wk * omega.eval(zk)
        return acc
    vals = omega(nodes)
    return complex(np.sum(vals * w))


# ---------------------------------------------------------------------------
# polynomial matrices (twist germs)
# ---------------------------------------------------------------------------

def polymat_eval(coeffs, z):
    coeffs = np.asarray(coeffs, dtype=complex)
    out = np.zeros(coeffs.shape[1:], dtype=complex)
    for k in range(coeffs.shape[0] - 1, -1, -1):
        out = out * z + coeffs[k]
    return out


def polymat_mul(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.zeros((a.shape[0] + b.shape[0] - 1,) + a.shape[1:], dtype=complex)
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i + j] += a[i] @ b[j]
    return out


def polymat_det(coeffs):
    """Determinant of a polynomial matrix, as ascending coefficients."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = coeffs.shape[1]
    if n == 1:
        return poly_trim(coeffs[:, 0, 0], rel_tol=1e-14)
    acc = np.zeros(1, dtype=complex)
    for j in range(n):
        minor = coeffs[:, 1:, [c for c in range(n) if c != j]]
        term = npoly.polymul(coeffs[:, 0, j], polymat_det_scalar(minor))
        acc = npoly.polyadd(acc, term if j % 2 == 0 else -term)
    return poly_trim(acc, rel_tol=1e-14)


def polymat_det_scalar(coeffs):
    return polymat_det(coeffs)


def polymat_inverse_jet(coeffs, k_max):
    """Laurent jet (at 0, in the germ's own coordinate) of ``T(zeta)**-1``.

    Works for germs whose determinant vanishes at 0 (the normal situation
    for twist sites): ``T**-1 = adj(T) / det(T)``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = coeffs.shape[1]
    det = polymat_det(coeffs)
    scale = np.max(np.abs(det))
    if scale == 0.0:
        raise MalformedInputError("identically singular germ")
    mu = 0
    while mu < det.size and abs(det[mu]) <= 1e-12 * scale:
        mu += 1
    unit = det[mu:]
    K = k_max + mu + 1
    det_inv = series_div(np.array([1.0 + 0j]), unit, max(K, 1))
    # adjugate as a polynomial matrix
    adj = np.zeros(((n - 1) * (coeffs.shape[0] - 1) + 1, n, n), dtype=complex)
    if n == 1:
        adj[0, 0, 0] = 1.0
    else:
        for i in range(n):
            for j in range(n):
                rows = [r for r in range(n) if r != i]
                cols = [c for c in range(n) if c != j]
                minor = coeffs[:, rows][:, :, cols]
                md = polymat_det(minor)
                sign = -1.0 if (i + j) % 2 else 1.0
                adj[: md.size, j, i] = sign * md
    out = np.zeros((K, n, n), dtype=complex)
    for k in range(K):
        for a in range(min(k + 1, adj.shape[0])):
            out[k] += adj[a] * det_inv[k - a]
    return LaurentJet(0.0, -mu, out, 0)
