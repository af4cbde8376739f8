"""Monodromy by parallel transport of fundamental solutions.

Keyhole loops from a common base point generate the representation; with
loops ordered by increasing argument, the ordered product is a loop around
everything and collapses to the identity whenever the form is regular at
infinity.
"""
import numpy as np

from isomonodromy import (
    Connection,
    Path,
    conjugacy_invariants,
    monodromy_rep,
    transport,
)

# closed-form sanity: A = diag(r)/z around the unit circle
r = np.array([0.3 - 0.1j, -0.45 + 0.2j])
conn = Connection.from_polar_parts([(0.0, [np.diag(r)])])
M = transport(conn, Path.circle(0.0, 1.0), tol=1e-12)
print("diagonal closed form  exp(2 pi i r):")
print(np.round(np.diag(np.exp(2j * np.pi * r)), 10))
print("transported:")
print(np.round(M, 10))
print()

# a rank-2 Fuchsian system with balanced residues
rng = np.random.default_rng(3)
mats = []
for _ in range(3):
    mats.append(0.4 * (rng.standard_normal((2, 2))
                       + 1j * rng.standard_normal((2, 2))))
mats.append(-sum(mats))
ts = [-1.8, -0.3, 0.9, 2.2]
conn = Connection.from_polar_parts(list(zip(ts, [[M] for M in mats])))
print("regular at infinity:", conn.is_regular_at_infinity())

rep = monodromy_rep(conn, 0.2 - 2.5j, tol=1e-11)
print("loop order (by argument from the base point):",
      [f"{p:.1f}" for p in rep.pole_points])
print("ordered product defect |M_l...M_1 - I|:",
      f"{rep.product_defect:.2e}")
print()

inv = conjugacy_invariants(rep)
print("conjugation invariants (char-poly coefficients, pair traces):")
print(np.round(np.array(inv)[:6], 8))

# the determinant rides along: Liouville check on one loop
Y, logdet = transport(conn, rep.loops[0], tol=1e-11, with_logdet=True)
print()
print("Liouville determinant check on the first loop:",
      f"{abs(np.linalg.det(Y) - np.exp(logdet)):.2e}")
