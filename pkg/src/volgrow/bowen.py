"""Bowen/Katok entropy from greedy covers by dynamical balls, and Monte-Carlo
integrals of restricted Jacobians over a single dynamical ball.

Greedy cover: grid points are scanned in lexicographic order and a point
becomes a centre unless an earlier centre's (n, delta)-ball already holds it.
Centres are bucketed in a hash grid keyed on the cells of their first and
last orbit points, so a candidate is only compared against centres in the
3^(2d) neighbouring buckets.  Because a point is added exactly when it is
(n, delta)-separated from every earlier centre, the greedy spanning set and
the greedy maximal separated set coincide.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import logsumexp

from . import cocycle, seeding, splitting, systems, volume
from .errors import ArgumentError, NumericalError

MIN_POINTS_PER_DELTA = 10
# float64 orbit storage for the whole grid (resolution^d * n * d * 8 bytes)
GRID_MEMORY_BUDGET = 2 * 1024 ** 3
# cap on hash buckets; cells get coarser (never finer than delta) above it
MAX_BUCKETS = 1 << 24
DEFAULT_DELTA = {2: 0.05, 3: 0.08}
DEFAULT_RESOLUTION = {2: 1024, 3: 128}
BUNDLE_CHOICES = ("max_over_V", "fixed_F_i", "max_over_F_i")
PROPOSALS = ("ball", "shadowing")
# the shadowing slab is this many times wider than the linearized ball
SHADOW_INFLATION = 2.0
NEWTON_ITERS = 3


def default_delta(dimension):
    return DEFAULT_DELTA.get(dimension, 0.08)


def _check_delta(delta, operation):
    if not 0.0 < delta < 0.5:
        raise ArgumentError("delta must satisfy 0 < delta < 0.5", module="bowen-entropy",
                            operation=operation, offending=delta)


@dataclass(frozen=True)
class DynamicalBallQuery:
    center: tuple
    n: int
    delta: float

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError("n must be >= 1", module="bowen-entropy",
                                operation="DynamicalBallQuery", offending=self.n)
        _check_delta(self.delta, "DynamicalBallQuery")


def in_dynamical_ball(system, q, y):
    x = systems.as_point(q.center, system.dimension)
    y = systems.as_point(y, system.dimension)
    for i in range(q.n):
        if systems.torus_distance(x, y) > q.delta:
            return False
        if i < q.n - 1:
            x = systems.evaluate(system, x)
            y = systems.evaluate(system, y)
    return True


def dynamical_ball_mask(system, center, n, delta, points):
    """Vectorized membership: boolean mask over the rows of ``points``."""
    _check_delta(delta, "in_dynamical_ball")
    x = systems.as_point(center, system.dimension)
    y = systems.as_point(points, system.dimension)
    mask = np.ones(y.shape[0], dtype=bool)
    for i in range(n):
        mask &= systems.torus_distance(x, y) <= delta
        if i < n - 1:
            x = systems.evaluate(system, x)
            y = systems.evaluate(system, y)
    return mask


@dataclass
class EntropyEstimate:
    value: float
    n: int
    delta: float
    cover_size: int
    method: str
    grid_points: int = 0
    resolution: int = 0
    saturated: bool = False

    def to_dict(self):
        return {"value": self.value, "n": self.n, "delta": self.delta,
                "cover_size": self.cover_size, "method": self.method,
                "grid_points": self.grid_points, "resolution": self.resolution,
                "saturated": self.saturated}


@njit(cache=True)
def _close(orb, p, q, delta):
    n, d = orb.shape[1], orb.shape[2]
    for i in range(n):
        for a in range(d):
            diff = abs(orb[p, i, a] - orb[q, i, a])
            if diff > 0.5:
                diff = 1.0 - diff
            if diff > delta:
                return False
    return True


@njit(cache=True)
def _greedy_cover(orb, cells, nc, delta):
    m = orb.shape[0]
    k = cells.shape[1]
    buckets = 1
    for _ in range(k):
        buckets *= nc
    head = np.full(buckets, -1, np.int64)
    nxt = np.full(m, -1, np.int64)
    is_centre = np.zeros(m, np.bool_)
    neighbours = 1
    for _ in range(k):
        neighbours *= 3
    count = 0
    for p in range(m):
        covered = False
        for code in range(neighbours):
            c = code
            key = 0
            for j in range(k):
                key = key * nc + (cells[p, j] + c % 3 - 1 + nc) % nc
                c //= 3
            q = head[key]
            while q >= 0:
                if _close(orb, p, q, delta):
                    covered = True
                    break
                q = nxt[q]
            if covered:
                break
        if not covered:
            key = 0
            for j in range(k):
                key = key * nc + cells[p, j]
            nxt[p] = head[key]
            head[key] = p
            is_centre[p] = True
            count += 1
    return count, is_centre


def _grid_orbits(system, n, resolution):
    d = system.dimension
    need = resolution ** d * n * d * 8
    if need > GRID_MEMORY_BUDGET:
        raise ArgumentError(
            f"grid orbit storage {need / 2**30:.2f} GiB exceeds the "
            f"{GRID_MEMORY_BUDGET / 2**30:.0f} GiB budget",
            module="bowen-entropy", operation="spanning_entropy",
            offending={"resolution": resolution, "n": n, "dimension": d})
    pts = systems.grid_points(resolution, d)
    orb = np.empty((pts.shape[0], n, d))
    y = pts
    for i in range(n):
        orb[:, i] = y
        if i < n - 1:
            y = systems.evaluate(system, y)
    return orb


def greedy_cover(system, n, delta, resolution, operation="spanning_entropy"):
    """Greedy (n, delta) cover of the lexicographic midpoint grid.

    Returns ``(count, centre_mask)``; the mask is over grid points in scan order.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1", module="bowen-entropy", operation=operation,
                            offending=n)
    _check_delta(delta, operation)
    if resolution * delta < MIN_POINTS_PER_DELTA:
        raise ArgumentError(
            f"grid too coarse: resolution*delta = {resolution * delta:g} < "
            f"{MIN_POINTS_PER_DELTA}", module="bowen-entropy", operation=operation,
            offending={"resolution": resolution, "delta": delta})
    d = system.dimension
    orb = _grid_orbits(system, n, resolution)
    nc = max(int(math.floor(1.0 / delta)), 1)
    nc = min(nc, int(MAX_BUCKETS ** (1.0 / (2 * d))))
    ends = np.concatenate([orb[:, 0], orb[:, -1]], axis=1)
    cells = np.minimum((ends * nc).astype(np.int64), nc - 1)
    return _greedy_cover(orb, np.ascontiguousarray(cells), nc, float(delta))


def _estimate(system, n, delta, resolution, method):
    count, _ = greedy_cover(system, n, delta, resolution, operation=f"{method}_entropy")
    total = resolution ** system.dimension
    return EntropyEstimate(value=float(np.log(count) / n), n=n, delta=delta,
                           cover_size=int(count), method=method, grid_points=total,
                           resolution=resolution, saturated=bool(count == total))


def spanning_entropy(system, n, delta, resolution):
    return _estimate(system, n, delta, resolution, "spanning")


def separated_entropy(system, n, delta, resolution):
    return _estimate(system, n, delta, resolution, "separated")


@dataclass
class BallGrowthReport:
    center: list
    n_values: list
    normalized_log_integrals: list
    delta: float
    accepted_fraction: list
    bundle_choice: str = "max_over_V"
    bundle_index: int = None
    proposal: str = "ball"
    mc_count: int = 0
    seed: int = 0
    log_integrals: list = field(default_factory=list)
    unreliable: list = field(default_factory=list)
    edge_fraction: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "center", "n_values", "normalized_log_integrals", "delta", "accepted_fraction",
            "bundle_choice", "bundle_index", "proposal", "mc_count", "seed",
            "log_integrals", "unreliable", "edge_fraction")}


def _integrand_logs(system, points, n, bundle_choice, bundle_index, dims, seed):
    if bundle_choice == "max_over_V":
        _, log_sigma, _, _ = cocycle.accumulate_batch(system, points, n)
        return volume.max_subspace_log_det(log_sigma)
    frames = splitting.estimate_splittings(system, points, dims=dims, seed=seed)
    if bundle_choice == "fixed_F_i":
        indices = [bundle_index]
    else:
        indices = range(frames[0].centre_count + 1)
    out = []
    for i in indices:
        bundles = np.stack([f.bundle(i) for f in frames])
        out.append(cocycle.restricted_log_det_batch(system, points, n, bundles))
    return np.max(np.stack(out), axis=0)


def _wrap_diff(a, b):
    return (a - b + 0.5) % 1.0 - 0.5


def _shadow_proposal(system, x, n, delta, u):
    """Slab proposal aligned with the singular frame of Df^{n-1}_x.

    Coordinates v = W^T (y - x).  Directions stretched by sigma <= 2 get
    half-width sqrt(d)*delta*min(1, 2/sigma); strongly stretched ones are
    centred on the sheet where f^{n-1}(y) matches f^{n-1}(x) along the
    expanding directions (found by Newton continuation over the orbit) and
    get half-width SHADOW_INFLATION*sqrt(d)*delta/sigma.  The map from u in
    [-1, 1]^d to y is a shear of a box, so its volume is 2^d prod(half-widths).
    """
    d = system.dimension
    r = math.sqrt(d) * delta
    if n == 1:
        half = np.full(d, r)
        return systems.wrap(x + u * half), float(np.sum(np.log(2 * half)))
    c = cocycle.accumulate(system, x, n - 1)
    sigma = np.exp(c.log_singular)
    W = c.right_orthogonal
    thin = sigma > 2.0
    half = np.where(thin, SHADOW_INFLATION * r / sigma, r * np.minimum(1.0, 2.0 / sigma))
    v = u * half
    t = int(thin.sum())
    if t:
        WT = W[:, thin]
        base = x + v[:, ~thin] @ W[:, ~thin].T
        offset = np.zeros((u.shape[0], t))
        x_orbit = systems.orbit(system, x, n)
        for k in range(1, n):
            ck = cocycle.accumulate(system, x, k)
            P = ck.left_orthogonal[:, :t]
            for _ in range(NEWTON_ITERS):
                y = systems.wrap(base + offset @ WT.T)
                J = np.broadcast_to(WT, (y.shape[0], d, t)).copy()
                for _ in range(k):
                    J = systems.jacobian(system, y) @ J
                    y = systems.evaluate(system, y)
                resid = _wrap_diff(y, x_orbit[k]) @ P
                step = np.linalg.solve(P.T @ J, resid[..., None])[..., 0]
                offset -= step
        if not np.all(np.isfinite(offset)):
            raise NumericalError("shadowing continuation diverged", module="bowen-entropy",
                                 operation="ball_volume_growth",
                                 offending={"center": x.tolist(), "n": n})
        y = base + offset @ WT.T + v[:, thin] @ WT.T
    else:
        y = x + v @ W.T
    return systems.wrap(y), float(np.sum(np.log(2 * half)))


def ball_volume_growth(system, x, n_values, delta, bundle_choice="max_over_V",
                       mc_count=10_000, seed=0, bundle_index=None, proposal="ball",
                       dims=None):
    """Monte-Carlo estimate of (1/n) log of the integral over B(x, n, delta).

    ``proposal="ball"`` samples the L-infinity ball B(x, delta) of volume
    (2 delta)^d and rejects points outside the dynamical ball.  Since the
    dynamical ball shrinks like e^{-n h}, acceptance collapses quickly;
    entries with fewer than 10 accepted samples are flagged unreliable and
    zero acceptance gives -inf.  ``proposal="shadowing"`` samples a slab
    fitted to the ball instead (see ``_shadow_proposal``), which keeps the
    acceptance fraction of order one.
    """
    _check_delta(delta, "ball_volume_growth")
    if mc_count < 100:
        raise ArgumentError("mc_count must be >= 100", module="bowen-entropy",
                            operation="ball_volume_growth", offending=mc_count)
    if bundle_choice not in BUNDLE_CHOICES:
        raise ArgumentError(f"bundle_choice must be one of {BUNDLE_CHOICES}",
                            module="bowen-entropy", operation="ball_volume_growth",
                            offending=bundle_choice)
    if proposal not in PROPOSALS:
        raise ArgumentError(f"proposal must be one of {PROPOSALS}", module="bowen-entropy",
                            operation="ball_volume_growth", offending=proposal)
    if bundle_choice == "fixed_F_i" and bundle_index is None:
        raise ArgumentError("fixed_F_i needs bundle_index", module="bowen-entropy",
                            operation="ball_volume_growth")
    n_values = [int(n) for n in n_values]
    if not n_values or min(n_values) < 1:
        raise ArgumentError("n_values must be non-empty with n >= 1", module="bowen-entropy",
                            operation="ball_volume_growth", offending=n_values)
    d = system.dimension
    x = systems.as_point(x, d)
    report = BallGrowthReport(center=x.tolist(), n_values=n_values,
                              normalized_log_integrals=[], delta=delta,
                              accepted_fraction=[], bundle_choice=bundle_choice,
                              bundle_index=bundle_index, proposal=proposal,
                              mc_count=mc_count, seed=seed)
    for n in n_values:
        rng = seeding.stream(seed, "bowen-entropy", "ball-growth", n)
        u = rng.uniform(-1.0, 1.0, size=(mc_count, d))
        if proposal == "ball":
            y, log_vol = systems.wrap(x + delta * u), d * math.log(2 * delta)
        else:
            y, log_vol = _shadow_proposal(system, x, n, delta, u)
        mask = dynamical_ball_mask(system, x, n, delta, y)
        accepted = int(mask.sum())
        if accepted:
            logs = _integrand_logs(system, y[mask], n, bundle_choice, bundle_index, dims, seed)
            log_int = float(log_vol + logsumexp(logs) - math.log(mc_count))
        else:
            log_int = -math.inf
        report.log_integrals.append(log_int)
        report.normalized_log_integrals.append(log_int / n)
        report.accepted_fraction.append(accepted / mc_count)
        report.unreliable.append(accepted < 10)
        edge = np.abs(u[mask]).max(axis=1) > 0.9 if accepted else np.zeros(0)
        report.edge_fraction.append(float(edge.mean()) if accepted else 0.0)
    return report

