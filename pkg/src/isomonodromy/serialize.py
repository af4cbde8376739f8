"""JSON and CSV codecs for every public data type.

Conventions: complex numbers are two-element arrays ``[re, im]``; the point
at infinity is the string ``"inf"``; matrices are nested lists of complex
pairs; polynomial matrices are lists of matrices in ascending powers.
Emitted JSON round-trips bit-exactly (shortest-roundtrip float formatting,
sorted keys), and CSV cells carry 17 significant digits.
"""

from __future__ import annotations

import json

import numpy as np

from .connection import BasePole, Connection, polar_decompose
from .errors import MalformedInputError
from .monodromy import LineSegment
from .ratfun import INFINITY, RatMat, RatScalar, is_infinity
from .states import FlowState, PoleData
from .twist import MatrixDivisor, TwistSite, normal_form


# ---------------------------------------------------------------------------
# scalars and matrices
# ---------------------------------------------------------------------------

def cx(z):
    z = complex(z)
    return [z.real, z.imag]


def un_cx(v):
    if isinstance(v, str) and v == "inf":
        return INFINITY
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise MalformedInputError(f"expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def point(p):
    return "inf" if is_infinity(p) else cx(p)


def matrix(M):
    M = np.asarray(M, dtype=complex)
    return [[cx(M[i, j]) for j in range(M.shape[1])] for i in range(M.shape[0])]


def un_matrix(rows):
    return np.array([[un_cx(e) for e in row] for row in rows], dtype=complex)


def ratscalar(f):
    return {"num": [cx(c) for c in f.num],
            "poles": [[cx(r), int(m)] for r, m in f.poles]}


def un_ratscalar(d):
    num = np.array([un_cx(c) for c in d["num"]], dtype=complex)
    poles = [(un_cx(r), int(m)) for r, m in d.get("poles", [])]
    return RatScalar(num, poles)


def ratmat(A):
    return {"n": A.n,
            "entries": [[ratscalar(e) for e in row] for row in A.entries]}


def un_ratmat(d):
    return RatMat([[un_ratscalar(e) for e in row] for row in d["entries"]])


# ---------------------------------------------------------------------------
# connections, twists, states
# ---------------------------------------------------------------------------

def connection(conn):
    pole_data, tail = polar_decompose(conn.matrix)
    by_point = {complex(t): coeffs for t, coeffs in pole_data}
    poles = []
    for t, l in zip(conn.divisor.points, conn.divisor.mults):
        coeffs = by_point.get(complex(t),
                              [np.zeros((conn.n, conn.n))] * l)
        coeffs = list(coeffs) + [np.zeros((conn.n, conn.n))] * (l - len(coeffs))
        # JSON stores orders -l .. -1; internal lists are C_1 .. C_l
        poles.append({"t": cx(t), "l": int(l),
                      "coeffs": [matrix(coeffs[k]) for k in
                                 range(l - 1, -1, -1)]})
    out = {"n": conn.n, "poles": poles,
           "tail": [matrix(M) for M in tail] if tail.size else None,
           "base_pole": None}
    if conn.base_pole is not None:
        out["base_pole"] = {"point": point(conn.base_pole.point),
                            "k": conn.base_pole.k}
    if conn.twist_points:
        out["twist_points"] = [cx(p) for p in conn.twist_points]
    return out


def un_connection(d):
    pole_data = []
    for p in d["poles"]:
        t = un_cx(p["t"])
        coeffs = [un_matrix(M) for M in p["coeffs"]]
        coeffs.reverse()   # back to C_1 .. C_l
        pole_data.append((t, coeffs))
    tail = [un_matrix(M) for M in d["tail"]] if d.get("tail") else None
    base = None
    if d.get("base_pole"):
        bp = d["base_pole"]
        base = BasePole(int(bp["k"]), un_cx(bp["point"]))
    conn = Connection.from_polar_parts(pole_data, n=int(d["n"]), tail=tail,
                                       base_pole=base)
    return conn


def twist_site(site):
    return {"p": cx(site.point),
            "T": [matrix(site.germ[k]) for k in range(site.germ.shape[0])]}


def un_twist_site(d):
    if "params" in d:
        return normal_form(un_cx(d["p"]), [un_cx(c) for c in d["params"]])
    germ = np.stack([un_matrix(M) for M in d["T"]])
    return TwistSite(un_cx(d["p"]), germ)


def matrix_divisor(div):
    return {"sites": [twist_site(s) for s in div.sites]}


def un_matrix_divisor(d):
    return MatrixDivisor(tuple(un_twist_site(s) for s in d["sites"]))


def flow_state(state):
    poles = []
    for p in state.poles:
        entry = {"t": cx(p.t), "l": p.l, "h": matrix(p.h),
                 "res": matrix(p.lam_res),
                 "irr": [[cx(v) for v in row] for row in p.lam_irr]}
        if p.u.size:
            entry["u"] = [matrix(p.u[k]) for k in range(p.u.shape[0])]
        poles.append(entry)
    out = {"n": state.n, "poles": poles}
    if state.twist is not None:
        out["twists"] = matrix_divisor(state.twist)
    return out


def un_flow_state(d):
    if "connection" in d:
        conn = un_connection(d["connection"])
        twist = un_matrix_divisor(d["twists"]) if d.get("twists") else None
        return FlowState.from_connection(conn, twist)
    poles = []
    for p in d["poles"]:
        l = int(p["l"])
        irr = np.array([[un_cx(v) for v in row] for row in p.get("irr", [])],
                       dtype=complex).reshape(l - 1, -1) if l > 1 else None
        u = np.stack([un_matrix(M) for M in p["u"]]) if p.get("u") else None
        poles.append(PoleData(un_cx(p["t"]), l, un_matrix(p["h"]),
                              un_matrix(p["res"]), irr, u))
    twist = un_matrix_divisor(d["twists"]) if d.get("twists") else None
    return FlowState(int(d["n"]), tuple(poles), twist)


# ---------------------------------------------------------------------------
# monodromy output
# ---------------------------------------------------------------------------

def path_segments(path):
    out = []
    for seg in path.segments:
        if isinstance(seg, LineSegment):
            out.append({"kind": "line", "start": cx(seg.start),
                        "end": cx(seg.end)})
        else:
            out.append({"kind": "arc", "center": cx(seg.center),
                        "radius": seg.radius, "theta0": seg.theta0,
                        "theta1": seg.theta1})
    return out


def monodromy_rep_out(rep, invariants):
    return {"base": cx(rep.base_point),
            "poles": [cx(p) for p in rep.pole_points],
            "loops": [path_segments(lp) for lp in rep.loops],
            "matrices": [matrix(M) for M in rep.matrices],
            "invariants": [cx(v) for v in invariants],
            "product_defect": rep.product_defect,
            "tol": rep.tol}


def drift_report_out(report):
    return {
        "samples": list(report.samples),
        "max_drift": report.max_drift,
        "formal_residue_drift": report.formal_residue_drift,
        "base_point": cx(report.base_point),
        "invariants": [[cx(v) for v in row] for row in report.invariants],
        "formal": [[[ [cx(v) for v in branch] for branch in pole]
                    for pole in sample] for sample in report.formal],
        "notes": list(report.notes),
    }


# ---------------------------------------------------------------------------
# trajectory CSV
# ---------------------------------------------------------------------------

def _fmt(x):
    return f"{x:.17g}"


def trajectory_csv(traj):
    """Lossless CSV: sample parameter, pole positions, chart coordinates,
    irregular entries; real and imaginary parts in separate columns."""
    state0 = traj.states[0]
    header = ["s"]
    for i in range(len(state0.poles)):
        header += [f"t{i}.re", f"t{i}.im"]
    for k in range(state0.chart_dim()):
        header += [f"c{k}.re", f"c{k}.im"]
    for i, p in enumerate(state0.poles):
        for j in range((p.l - 1) * p.n):
            header += [f"irr{i}_{j}.re", f"irr{i}_{j}.im"]
    lines = [",".join(header)]
    for s, st in zip(traj.samples, traj.states):
        row = [_fmt(s)]
        for p in st.poles:
            row += [_fmt(p.t.real), _fmt(p.t.imag)]
        for c in st.chart_vector():
            row += [_fmt(c.real), _fmt(c.imag)]
        for p in st.poles:
            for v in p.lam_irr.ravel():
                row += [_fmt(v.real), _fmt(v.imag)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1)
