import numpy as np
import pytest

from isomonodromy.ratfun import RatMat, RatScalar


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_rational_one_form(rng, n_poles=3, max_order=2, min_sep=0.1, tail_deg=-1):
    """Random rational dz-coefficient with well-separated poles.

    Used as the shared generator for residue-theorem and oracle tests.
    """
    poles = []
    while len(poles) < n_poles:
        cand = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if all(abs(cand - p) >= min_sep for p in poles):
            poles.append(cand)
    f = RatScalar.zero()
    for p in poles:
        order = int(rng.integers(1, max_order + 1))
        for k in range(1, order + 1):
            c = complex(rng.standard_normal(), rng.standard_normal())
            f = f + RatScalar.simple_pole(p, c, k)
    if tail_deg >= 0:
        f = f + RatScalar(rng.standard_normal(tail_deg + 1)
                          + 1j * rng.standard_normal(tail_deg + 1))
    return f, poles


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def random_invertible(rng, n, scale=1.0):
    while True:
        M = random_matrix(rng, n, scale) + 0.5 * np.eye(n)
        if abs(np.linalg.det(M)) > 0.1:
            return M


def random_fuchsian_matrices(rng, n, n_poles, zero_sum=True):
    """Residue matrices with entries uniform in the unit disk, sum zero.

    The zero-sum constraint (regularity at infinity) is imposed by
    projecting the independent draws onto the constraint plane, which keeps
    every entry near the unit disk.
    """
    mats = []
    for _ in range(n_poles):
        r = np.sqrt(rng.uniform(0, 1, (n, n)))
        phi = rng.uniform(0, 2 * np.pi, (n, n))
        mats.append(r * np.exp(1j * phi))
    if zero_sum:
        mean = sum(mats) / n_poles
        mats = [M - mean for M in mats]
    return mats


def fuchsian_connection(poles, mats):
    A = RatMat.zero(mats[0].shape[0])
    for p, M in zip(poles, mats):
        A = A + RatMat.from_polar_part(p, [M])
    return A
