"""Rational functions with factored denominators: residues three ways.

The library keeps denominators as (root, multiplicity) pairs, so residues
and Laurent jets come out of exact series manipulation.  An independent
trapezoid contour quadrature cross-checks every symbolic residue.
"""
import numpy as np

from isomonodromy import (
    INFINITY,
    RatScalar,
    residue,
    residue_quadrature_oracle,
    residue_sum_all_poles,
)

# f = 3/(z-1)^2 + (2+1j)/(z-1) - 4/(z+2) + z
f = (RatScalar.simple_pole(1.0, 3.0, order=2)
     + RatScalar.simple_pole(1.0, 2.0 + 1.0j)
     + RatScalar.simple_pole(-2.0, -4.0)
     + RatScalar.monomial(1))

print("pole structure:", f.poles)
print()

print("residues, symbolic vs contour quadrature:")
for p in (1.0, -2.0):
    sym = residue(f, p)
    quad = residue_quadrature_oracle(f, p, radius=1.0, N=128)
    print(f"  at z={p}: {sym:.15f}   quadrature {quad:.15f}   "
          f"difference {abs(sym - quad):.2e}")

print()
print("the point at infinity balances the books (residue theorem):")
print(f"  residue at infinity: {residue(f, INFINITY):.15f}")
print(f"  sum over all poles:  {abs(residue_sum_all_poles(f)):.2e}")

print()
terms, poly = f.partial_fractions()
print("partial fractions recover the building blocks:")
for p, k, c in terms:
    print(f"  {c:.6g} / (z - {p:.6g})^{k}")
print(f"  polynomial part coefficients: {np.round(poly, 12)}")

jet = f.laurent(1.0, 2)
print()
print("Laurent jet at the double pole (orders -2..2):")
for k in range(jet.k_min, 3):
    print(f"  c_{k:+d} = {jet.coefficient(k):.12g}")
