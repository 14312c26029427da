"""One-sided Jacobi SVD for tiny dense matrices, with log-scaled columns.

A matrix is held as ``G diag(exp(c))``: unit direction columns ``G`` and
log column scales ``c``.  Rotations are computed from scale ratios only, so
products whose singular values span thousands of orders of magnitude never
overflow and the small singular values keep full relative accuracy.
"""

import math

import numpy as np
from numba import njit

JACOBI_TOL = 1e-15
MAX_SWEEPS = 60


@njit(cache=True)
def _normalize_column(G, c, j):
    nrm = 0.0
    for a in range(G.shape[0]):
        nrm += G[a, j] * G[a, j]
    nrm = math.sqrt(nrm)
    if nrm > 0.0:
        for a in range(G.shape[0]):
            G[a, j] /= nrm
        c[j] += math.log(nrm)
    else:
        c[j] = -np.inf


@njit(cache=True)
def _jacobi_scaled(G, c, V, tol, max_sweeps):
    """Orthogonalize the columns of ``G diag(exp(c))`` in place.

    On return the columns of G are orthonormal, ``exp(c)`` holds the singular
    values (descending) and V the accumulated right rotations.  Returns the
    number of sweeps, or -1 if ``max_sweeps`` was exhausted.
    """
    d, k = G.shape
    sweeps = -1
    for sweep in range(max_sweeps):
        rotated = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                if c[i] >= c[j]:
                    p, q = i, j
                else:
                    p, q = j, i
                if c[q] == -np.inf:
                    continue
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for a in range(d):
                    alpha += G[a, p] * G[a, p]
                    beta += G[a, q] * G[a, q]
                    gamma += G[a, p] * G[a, q]
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                r = math.exp(c[q] - c[p])
                w = (r * r * beta - alpha) / (2.0 * gamma)
                sgn = 1.0 if w >= 0.0 else -1.0
                t_over_r = sgn / (abs(w) + math.sqrt(r * r + w * w))
                t = r * t_over_r
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                for a in range(d):
                    gp = G[a, p]
                    gq = G[a, q]
                    G[a, p] = cs * gp - sn * r * gq
                    G[a, q] = cs * t_over_r * gp + cs * gq
                for a in range(k):
                    vp = V[a, p]
                    vq = V[a, q]
                    V[a, p] = cs * vp - sn * vq
                    V[a, q] = sn * vp + cs * vq
                _normalize_column(G, c, p)
                _normalize_column(G, c, q)
        if not rotated:
            sweeps = sweep + 1
            break
    # insertion sort, descending log scale
    for i in range(1, k):
        j = i
        while j > 0 and c[j - 1] < c[j]:
            tmp = c[j - 1]
            c[j - 1] = c[j]
            c[j] = tmp
            for a in range(d):
                tmp = G[a, j - 1]
                G[a, j - 1] = G[a, j]
                G[a, j] = tmp
            for a in range(k):
                tmp = V[a, j - 1]
                V[a, j - 1] = V[a, j]
                V[a, j] = tmp
            j -= 1
    return sweeps


@njit(cache=True)
def _load_columns(B, offset, G, c):
    d, k = B.shape
    for j in range(k):
        c[j] = offset[j]
        for a in range(d):
            G[a, j] = B[a, j]
        _normalize_column(G, c, j)


@njit(cache=True)
def svd_batch(A, tol, max_sweeps):
    m, d, k = A.shape
    U = np.empty((m, d, k))
    logs = np.empty((m, k))
    V = np.empty((m, k, k))
    status = 0
    zeros = np.zeros(k)
    for b in range(m):
        G = np.empty((d, k))
        c = np.empty(k)
        Vb = np.eye(k)
        _load_columns(A[b], zeros, G, c)
        if _jacobi_scaled(G, c, Vb, tol, max_sweeps) < 0:
            status = -1
        U[b] = G
        logs[b] = c
        V[b] = Vb
    return U, logs, V, status


@njit(cache=True)
def _matmul(A, B, out):
    n, m = A.shape
    k = B.shape[1]
    for i in range(n):
        for j in range(k):
            acc = 0.0
            for r in range(m):
                acc += A[i, r] * B[r, j]
            out[i, j] = acc


@njit(cache=True)
def refactor_step(U, s, W, J, tol, max_sweeps):
    """Replace the factors of ``U diag(exp(s)) W^T`` by those of ``J`` times it.

    All arrays carry a leading batch axis and are updated in place.
    """
    m, d, _ = U.shape
    status = 0
    G = np.empty((d, d))
    B = np.empty((d, d))
    c = np.empty(d)
    for b in range(m):
        _matmul(J[b], U[b], B)
        _load_columns(B, s[b], G, c)
        V = np.eye(d)
        if _jacobi_scaled(G, c, V, tol, max_sweeps) < 0:
            status = -1
        U[b] = G
        s[b] = c
        _matmul(W[b].copy(), V, W[b])
    return status


def jacobi_svd(a):
    """SVD of a ``(d, k)`` matrix or a ``(m, d, k)`` batch, d >= k.

    Returns ``(U, sigma, V)`` with ``a = U diag(sigma) V^T`` and sigma
    descending.  Zero singular values come back with zero U columns.
    """
    a = np.asarray(a, dtype=float)
    single = a.ndim == 2
    batch = np.ascontiguousarray(a[None] if single else a)
    if batch.shape[1] < batch.shape[2]:
        raise ValueError("jacobi_svd needs at least as many rows as columns")
    U, logs, V, _ = svd_batch(batch, JACOBI_TOL, MAX_SWEEPS)
    sigma = np.exp(logs)
    if single:
        return U[0], sigma[0], V[0]
    return U, sigma, V


def log_singular_values(a):
    """Log singular values of a matrix (or batch), descending."""
    a = np.asarray(a, dtype=float)
    single = a.ndim == 2
    batch = np.ascontiguousarray(a[None] if single else a)
    _, logs, _, _ = svd_batch(batch, JACOBI_TOL, MAX_SWEEPS)
    return logs[0] if single else logs


def orthonormalize(frame):
    """Orthonormal basis of the column span (batched QR)."""
    q, _ = np.linalg.qr(np.asarray(frame, dtype=float))
    return q


def subspace_gap(a, b):
    """Sine of the largest principal angle between two column spans.

    Both inputs must have orthonormal columns of equal count.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    resid = b - a @ (np.swapaxes(a, -1, -2) @ b)
    if resid.shape[-1] == 0:
        return np.zeros(resid.shape[:-2])
    return np.linalg.norm(resid, ord=2, axis=(-2, -1))
