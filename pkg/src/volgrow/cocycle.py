"""Derivative cocycle Df^n_x in factored, overflow-safe form.

The n-step product is kept as ``U diag(exp(log_singular)) W^T`` and
re-factored after every Jacobian, so log singular values are exact at each
finite n rather than only in the Lyapunov limit.
"""

from dataclasses import dataclass

import numpy as np

from . import systems
from .errors import ArgumentError, NumericalError
from .linalg import JACOBI_TOL, MAX_SWEEPS, refactor_step

# one step may shrink a pushed frame's volume by at most e^-300
RANK_COLLAPSE_LOG = -300.0


@dataclass
class CocycleProduct:
    left_orthogonal: np.ndarray
    log_singular: np.ndarray
    right_orthogonal: np.ndarray
    steps: int
    base_point: np.ndarray

    def matrix(self):
        """Reconstruct Df^n_x; only meaningful while exp() stays finite."""
        u, w = self.left_orthogonal, self.right_orthogonal
        return (u * np.exp(self.log_singular)) @ w.T


@dataclass
class LyapunovEstimate:
    exponents: np.ndarray
    orbit_length: int
    base_point: np.ndarray


def _check_jacobians(jac, step):
    if not np.all(np.isfinite(jac)):
        bad = int(np.argwhere(~np.isfinite(jac).reshape(len(jac), -1).all(axis=1))[0, 0])
        raise NumericalError(
            f"non-finite Jacobian entry at step {step}",
            module="cocycle-engine", operation="accumulate",
            offending={"step": step, "sample": bad},
        )


def accumulate_batch(system, points, n, record=None, refresh_every=1):
    """Accumulate Df^n over a batch of base points.

    Returns ``(U, log_singular, W, recorded)`` where ``recorded`` maps each
    step count in ``record`` to a copy of the log singular values there.
    """
    if n < 0:
        raise ArgumentError("n must be >= 0", module="cocycle-engine", operation="accumulate",
                            offending=n)
    if refresh_every < 1:
        raise ArgumentError("refresh_every must be >= 1", module="cocycle-engine",
                            operation="accumulate", offending=refresh_every)
    x = systems.as_point(points, system.dimension)
    if x.ndim == 1:
        x = x[None]
    m, d = x.shape
    U = np.tile(np.eye(d), (m, 1, 1))
    W = U.copy()
    s = np.zeros((m, d))
    wanted = set(record or ())
    recorded = {}
    if 0 in wanted:
        recorded[0] = s.copy()
    block = None
    for step in range(1, n + 1):
        jac = systems.jacobian(system, x)
        _check_jacobians(jac, step - 1)
        block = jac if block is None else jac @ block
        x = systems.evaluate(system, x)
        if step % refresh_every == 0 or step == n or step in wanted:
            if refactor_step(U, s, W, np.ascontiguousarray(block), JACOBI_TOL, MAX_SWEEPS) < 0:
                raise NumericalError("Jacobi sweeps did not converge", module="cocycle-engine",
                                     operation="accumulate", offending={"step": step})
            block = None
        if step in wanted:
            recorded[step] = s.copy()
    return U, s, W, recorded


def accumulate(system, x, n, refresh_every=1):
    x = systems.as_point(x, system.dimension)
    if x.ndim != 1:
        raise ArgumentError("accumulate takes a single point; use accumulate_batch",
                            module="cocycle-engine", operation="accumulate")
    U, s, W, _ = accumulate_batch(system, x, n, refresh_every=refresh_every)
    return CocycleProduct(U[0], s[0], W[0], n, x)


def log_singular_values(c):
    return np.array(c.log_singular, copy=True)


def lyapunov_spectrum(system, x, n):
    if n < 1:
        raise ArgumentError("n must be >= 1", module="cocycle-engine",
                            operation="lyapunov_spectrum", offending=n)
    c = accumulate(system, x, n)
    return LyapunovEstimate(c.log_singular / n, n, c.base_point)


def log_det_sum(system, x, n):
    """Sum over the orbit of log|det Df|, for checking volume bookkeeping."""
    x = systems.as_point(x, system.dimension)
    total = np.zeros(x.shape[:-1])
    for _ in range(n):
        total = total + np.log(np.abs(np.linalg.det(systems.jacobian(system, x))))
        x = systems.evaluate(system, x)
    return total


def restricted_log_det_batch(system, points, n, frames, check=True):
    """log|det Df^n restricted to span(frame)| for each point/frame pair.

    ``points`` is ``(m, d)`` and ``frames`` is ``(m, d, k)`` with orthonormal
    columns.  The frame is pushed along the orbit and re-orthonormalized every
    step; the per-step volume factors are summed in log form.
    """
    x = systems.as_point(points, system.dimension)
    q = np.array(frames, dtype=float)
    if x.ndim == 1:
        x, q = x[None], q[None]
    if q.ndim != 3 or q.shape[:2] != (x.shape[0], system.dimension):
        raise ArgumentError(f"frames must have shape (m, {system.dimension}, k)",
                            module="cocycle-engine", operation="restricted_log_det")
    k = q.shape[2]
    if check:
        gram_err = np.abs(np.swapaxes(q, 1, 2) @ q - np.eye(k)).max() if k else 0.0
        if gram_err > 1e-10:
            raise ArgumentError(f"frame columns are not orthonormal (error {gram_err:.2e})",
                                module="cocycle-engine", operation="restricted_log_det")
    total = np.zeros(x.shape[0])
    if k == 0:
        return total
    for step in range(n):
        jac = systems.jacobian(system, x)
        _check_jacobians(jac, step)
        q, r = np.linalg.qr(jac @ q)
        factor = np.sum(np.log(np.abs(np.diagonal(r, axis1=1, axis2=2))), axis=1)
        if np.any(factor < RANK_COLLAPSE_LOG) or not np.all(np.isfinite(factor)):
            raise NumericalError(f"pushed frame collapsed at step {step}",
                                 module="cocycle-engine", operation="restricted_log_det",
                                 offending={"step": step})
        total += factor
        x = systems.evaluate(system, x)
    return total


def restricted_log_det(system, x, n, frame):
    x = systems.as_point(x, system.dimension)
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 1:
        frame = frame[:, None]
    return float(restricted_log_det_batch(system, x[None], n, frame[None])[0])
