"""Independent oracles.

Nothing here calls into volgrow: values come from high-precision mpmath
arithmetic, brute force, or exact convex geometry, so agreement with the
package is a genuine cross-check.
"""

import itertools
import math

import mpmath
import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection

CAT = [[2, 1], [1, 1]]
mpmath.mp.dps = 60


def golden_log():
    """log of the larger eigenvalue of the cat matrix, from mpmath."""
    return float(mpmath.log((3 + mpmath.sqrt(5)) / 2))


CAT_ENTROPY = golden_log()


def expanding_entropy(matrix):
    """Sum of log|eigenvalue| > 0 using mpmath's eigensolver."""
    ev = mpmath.eig(mpmath.matrix(matrix))[0]
    return float(sum(mpmath.log(abs(e)) for e in ev if abs(e) > 1))


def product_log_singular(jacobians):
    """Descending log singular values of J_{n-1} ... J_0 in 60-digit arithmetic."""
    d = len(jacobians[0])
    prod = mpmath.eye(d)
    for J in jacobians:
        prod = mpmath.matrix(np.asarray(J).tolist()) * prod
    sv = mpmath.svd_r(prod, compute_uv=False)
    return sorted((float(mpmath.log(s)) for s in sv), reverse=True)


def pushed_line_log_growth(matrix, v, n):
    """log |A^n v| / |v| in 60-digit arithmetic for the given (rounded) vector v."""
    A = mpmath.matrix(np.asarray(matrix).tolist())
    w = mpmath.matrix([float(c) for c in v])
    start = mpmath.norm(w)
    for _ in range(n):
        w = A * w
    return float(mpmath.log(mpmath.norm(w) / start))


def brute_max_subspace(log_sigma):
    """max over every subset size k of the top-k partial sum (k = 0 gives 0)."""
    vals = sorted(log_sigma, reverse=True)
    return max(sum(vals[:k]) for k in range(len(vals) + 1))


def brute_max_over_subsets(log_sigma):
    """max over all index subsets, not only prefixes."""
    best = 0.0
    for r in range(1, len(log_sigma) + 1):
        for combo in itertools.combinations(log_sigma, r):
            best = max(best, sum(combo))
    return best


def cat_eigvecs():
    """Unit (unstable, stable) eigenvectors of the cat matrix in closed form."""
    phi = (1 + math.sqrt(5)) / 2
    u = np.array([phi, 1.0])
    s = np.array([-1.0, phi])
    return u / np.linalg.norm(u), s / np.linalg.norm(s)


def linear_ball_log_volume(matrix, n, delta):
    """log area of {v : |A^i v|_inf <= delta for 0 <= i < n} (exact polygon).

    Valid for delta small enough that the ball does not wrap around the torus.
    """
    A = np.asarray(matrix, dtype=float)
    rows = []
    M = np.eye(len(A))
    for _ in range(n):
        for r in M:
            rows.append(np.append(r, -delta))
            rows.append(np.append(-r, -delta))
        M = A @ M
    hs = HalfspaceIntersection(np.array(rows), np.zeros(len(A)))
    return math.log(ConvexHull(hs.intersections).volume)


def circle(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def brute_greedy_cover(orbits, delta):
    """Quadratic-time greedy cover in scan order; orbits has shape (m, n, d)."""
    centres = []
    for p in range(len(orbits)):
        diff = np.abs(orbits[p] - orbits[centres]) if centres else None
        if diff is not None:
            diff = np.minimum(diff, 1.0 - diff)
            if np.any(diff.max(axis=(1, 2)) <= delta):
                continue
        centres.append(p)
    return centres
