"""Deforming an irregular type while monodromy stays put.

The state has one order-2 pole with regular diagonal leading term plus two
simple poles.  Prescribing a path for the leading coefficient moves the
formal invariants exactly along it; the Hamiltonian correction keeps the
actual monodromy constant, and the order -1 formal exponents (which nothing
prescribes) stay constant as well.
"""
import numpy as np

from isomonodromy import (
    FlowPath,
    FlowState,
    PoleData,
    integrate_flow,
    verify_isomonodromy,
)

rng = np.random.default_rng(8)
lead = np.array([-0.45, 0.4])
rm = lambda: 0.25 * (rng.standard_normal((2, 2))
                     + 1j * rng.standard_normal((2, 2)))
lam0, A1 = rm(), rm()
state = FlowState(2, (
    PoleData(0.0, 2, np.eye(2), lam0, [lead]),
    PoleData(2.3, 1, np.eye(2), A1),
    PoleData(-2.0, 1, np.eye(2), -(lam0 + A1))))

rate = np.array([[0.8, -0.5]], dtype=complex)
path = FlowPath.irregular_line(state, 0, rate, length=0.5)
traj = integrate_flow(state, path, tol=1e-10, n_samples=5)
report = verify_isomonodromy(traj, tol=1e-10)

print("prescribed leading-coefficient path vs computed formal invariants:")
for s, f in zip(traj.samples, report.formal):
    want = np.sort_complex(lead + s * 0.5 * rate[0])
    got = np.sort_complex(f[0][0])
    print(f"  s={s:.2f}: prescribed {np.round(want, 6)}  "
          f"tracking error {np.max(np.abs(want - got)):.2e}")

print()
print("monodromy invariant drift:      ", f"{report.max_drift:.2e}")
print("unprescribed exponent drift:    ",
      f"{report.formal_residue_drift:.2e}")
print("(both should sit at integration-tolerance level)")
