"""Invariant splittings, domination checks and Grassmannian growth gaps.

Splittings are estimated numerically from flags: pushing a generic frame
forward along a (stored) backward orbit converges to the most-expanded
flag, pushing backward converges to the most-contracted one, and centre
blocks are the intersections of the two.  Known eigenvectors of linear
systems serve only as test oracles.
"""

from dataclasses import dataclass, field

import numpy as np

from . import cocycle, seeding, systems, volume
from .errors import ArgumentError, ConvergenceError
from .linalg import jacobi_svd, orthonormalize, subspace_gap

STAGNATION_TOL = 1e-6
INTERSECTION_TOL = 1e-8


@dataclass
class SplittingFrame:
    base_point: np.ndarray
    blocks: list
    labels: tuple

    @property
    def dims(self):
        return tuple(b.shape[1] for b in self.blocks)

    @property
    def centre_count(self):
        return len(self.blocks) - 2

    def lower(self, k):
        """Orthonormal basis of blocks[0] + ... + blocks[k-1]."""
        return _span(self.blocks[:k], self.base_point.shape[-1])

    def upper(self, k):
        """Orthonormal basis of blocks[k] + ... + blocks[-1]."""
        return _span(self.blocks[k:], self.base_point.shape[-1])

    def bundle(self, i):
        """F^i = E^{i+1} + ... + E^l + E^u, for 0 <= i <= l."""
        if not 0 <= i <= self.centre_count:
            raise ArgumentError(f"bundle index must lie in [0, {self.centre_count}]",
                                module="splitting-tools", operation="bundle", offending=i)
        return self.upper(i + 1)

    def to_dict(self):
        return {"base_point": self.base_point.tolist(), "labels": list(self.labels),
                "blocks": [b.tolist() for b in self.blocks]}


def _span(blocks, d):
    blocks = [b for b in blocks if b.shape[1]]
    if not blocks:
        return np.zeros((d, 0))
    return orthonormalize(np.concatenate(blocks, axis=1))


def block_labels(dims):
    centres = len(dims) - 2
    return ("stable",) + tuple(f"center_{i + 1}" for i in range(centres)) + ("unstable",)


def _check_dims(system, dims):
    dims = tuple(int(v) for v in (dims if dims is not None else systems.default_dims(system)))
    if len(dims) < 2 or any(v < 0 for v in dims) or sum(dims) != system.dimension:
        raise ArgumentError(f"dims must be (s, 1, ..., 1, u) summing to {system.dimension}",
                            module="splitting-tools", operation="estimate_splitting",
                            offending=list(dims))
    if any(v != 1 for v in dims[1:-1]):
        raise ArgumentError("centre blocks must be one-dimensional", module="splitting-tools",
                            operation="estimate_splitting", offending=list(dims))
    return dims


def _push(frames, jacobians):
    """Push frames through a sequence of batched matrices with QR renormalization."""
    q = frames
    for jac in jacobians:
        q = orthonormalize(jac @ q)
    return q


def _flags(system, x, n_fwd, n_bwd, rng):
    """Forward (most-expanded) and backward (most-contracted) full flags at x.

    Two independent generic frames are pushed in each direction; their
    disagreement measures how far the flags are from converged.
    """
    m, d = x.shape
    back = [x]
    for _ in range(n_fwd):
        back.append(systems.evaluate_inverse(system, back[-1]))
    fwd_jacs = [systems.jacobian(system, p) for p in reversed(back[1:])]
    ahead = [x]
    for _ in range(n_bwd - 1):
        ahead.append(systems.evaluate(system, ahead[-1]))
    bwd_jacs = [np.linalg.inv(systems.jacobian(system, p)) for p in reversed(ahead)]
    out = []
    for jacs in (fwd_jacs, bwd_jacs):
        pair = [_push(orthonormalize(rng.standard_normal((m, d, d))), jacs) for _ in range(2)]
        out.append(pair)
    return out


def estimate_splittings(system, points, n_fwd=40, n_bwd=40, dims=None, seed=0):
    """Batched splitting estimation; returns one SplittingFrame per point."""
    dims = _check_dims(system, dims)
    if n_fwd < 1 or n_bwd < 1:
        raise ArgumentError("n_fwd and n_bwd must be >= 1", module="splitting-tools",
                            operation="estimate_splitting", offending=[n_fwd, n_bwd])
    x = systems.as_point(points, system.dimension)
    single = x.ndim == 1
    if single:
        x = x[None]
    d = system.dimension
    rng = seeding.stream(seed, "splitting-tools", "generic-frames")
    (fa, fb), (ba, bb) = _flags(system, x, n_fwd, n_bwd, rng)
    s, u = dims[0], dims[-1]
    tails = np.cumsum(dims[::-1])[::-1]  # tails[j] = dims[j] + ... + dims[-1]
    heads = np.cumsum(dims)              # heads[j] = dims[0] + ... + dims[j]
    for k in sorted({int(t) for t in tails[1:]} | {int(h) for h in heads[:-1]}):
        if 0 < k < d:
            for a, b, which in ((fa, fb, "forward"), (ba, bb, "backward")):
                gap = subspace_gap(a[:, :, :k], b[:, :, :k])
                if np.any(gap > STAGNATION_TOL):
                    worst = int(np.argmax(gap))
                    raise ConvergenceError(
                        f"{which} flag of dimension {k} stagnated "
                        f"(successive-iterate angle {float(gap[worst]):.3g})",
                        module="splitting-tools", operation="estimate_splitting",
                        offending={"point": x[worst].tolist(), "flag_dim": k},
                    )
    frames = []
    for i in range(x.shape[0]):
        blocks = [ba[i, :, :s], ]
        for j in range(1, len(dims) - 1):
            fwd = fa[i, :, :int(tails[j])]
            bwd = ba[i, :, :int(heads[j])]
            blocks.append(_intersect(fwd, bwd, dims[j], x[i]))
        blocks.append(fa[i, :, :u])
        frames.append(SplittingFrame(x[i].copy(), [np.array(b) for b in blocks],
                                     block_labels(dims)))
    return frames[0] if single else frames


def _intersect(a, b, dim, point):
    """Intersection of two column spans through their principal vectors."""
    U, cosines, V = jacobi_svd(a.T @ b)
    if dim and cosines[dim - 1] < 1.0 - INTERSECTION_TOL:
        raise ConvergenceError(
            f"forward and backward flags do not intersect (cos {cosines[dim - 1]:.12f})",
            module="splitting-tools", operation="estimate_splitting",
            offending={"point": point.tolist()},
        )
    return orthonormalize(a @ U[:, :dim])


def estimate_splitting(system, x, n_fwd=40, n_bwd=40, dims=None, seed=0):
    x = systems.as_point(x, system.dimension)
    if x.ndim != 1:
        raise ArgumentError("estimate_splitting takes one point; use estimate_splittings",
                            module="splitting-tools", operation="estimate_splitting")
    return estimate_splittings(system, x, n_fwd, n_bwd, dims, seed)


def coordinate_splitting(x, dims):
    d = len(x)
    eye = np.eye(d)
    edges = np.concatenate([[0], np.cumsum(dims)])
    blocks = [eye[:, edges[i]:edges[i + 1]] for i in range(len(dims))]
    return SplittingFrame(np.asarray(x, dtype=float), blocks, block_labels(dims))


def default_split_index(dims):
    """Smallest k with a non-trivial lower bundle blocks[:k]."""
    total = 0
    for k, v in enumerate(dims, start=1):
        total += v
        if total >= 1:
            return k
    return 1


@dataclass
class DominationReport:
    passed: bool
    empirical_lambda: float
    T: int
    worst_point: list
    samples: int
    alpha: float = 1.0
    cone_invariant: bool = True
    split_index: int = 1
    splitting_source: str = "estimated"

    def to_dict(self):
        return {"passed": self.passed, "empirical_lambda": self.empirical_lambda,
                "T": self.T, "worst_point": self.worst_point, "samples": self.samples,
                "alpha": self.alpha, "cone_invariant": self.cone_invariant,
                "split_index": self.split_index, "splitting_source": self.splitting_source}


@dataclass(frozen=True)
class ConeSpec:
    E: np.ndarray
    F: np.ndarray
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ArgumentError("cone width must be > 0", module="splitting-tools",
                                operation="ConeSpec", offending=self.alpha)

    def boundary_vectors(self):
        """Extreme rays v_E + alpha v_F over a sign/coordinate lattice of unit vectors."""
        out = []
        for ve in _lattice_units(self.E):
            for vf in _lattice_units(self.F):
                out.append((ve, self.alpha * vf))
        return out


def _lattice_units(frame):
    k = frame.shape[1]
    units = []
    for i in range(k):
        units += [frame[:, i], -frame[:, i]]
        for j in range(i + 1, k):
            for sgn in (1.0, -1.0):
                units.append((frame[:, i] + sgn * frame[:, j]) / np.sqrt(2.0))
    return units


def _pushed_frame(system, x, frame, T):
    """Df^T applied to a frame, as (unit-scaled image, log scale)."""
    y = frame.copy()
    log_scale = 0.0
    for _ in range(T):
        y = systems.jacobian(system, x) @ y
        scale = np.linalg.norm(y)
        y /= scale
        log_scale += np.log(scale)
        x = systems.evaluate(system, x)
    return y, log_scale


def _domination_ratio(system, x, E, F, T):
    """log of max stretch on E over min stretch on F under Df^T_x."""
    ye, le = _pushed_frame(system, x, E, T)
    yf, lf = _pushed_frame(system, x, F, T)
    _, se, _ = jacobi_svd(ye)
    _, sf, _ = jacobi_svd(yf)
    return (le + np.log(se[0])) - (lf + np.log(sf[-1])), (ye, le, yf, lf)


def verify_domination(system, alpha=1.0, T=1, samples=32, seed=0, splittings=None,
                      split_index=None, dims=None, n_fwd=40, n_bwd=40):
    """Empirical domination constant of E = blocks[:k] against F = blocks[k:].

    ``splittings`` may be a list of SplittingFrame (their base points are
    used as the samples).  Otherwise splittings are estimated at seeded
    uniform points; if estimation stagnates (no domination to find) the
    coordinate splitting is tested instead and the report says so.
    """
    if not alpha > 0 or T < 1:
        raise ArgumentError("need alpha > 0 and T >= 1", module="splitting-tools",
                            operation="verify_domination", offending=[alpha, T])
    source = "supplied"
    if splittings is None:
        dims = _check_dims(system, dims)
        rng = seeding.stream(seed, "splitting-tools", "domination-points")
        pts = systems.sample_uniform(rng, samples, system.dimension)
        try:
            splittings = estimate_splittings(system, pts, n_fwd, n_bwd, dims, seed)
            source = "estimated"
        except ConvergenceError:
            splittings = [coordinate_splitting(p, dims) for p in pts]
            source = "coordinate-fallback"
    k = split_index if split_index is not None else default_split_index(splittings[0].dims)
    worst, worst_point, cone_ok = -np.inf, None, True
    for sp in splittings:
        E, F = sp.lower(k), sp.upper(k)
        if E.shape[1] == 0 or F.shape[1] == 0:
            raise ArgumentError("split leaves an empty bundle", module="splitting-tools",
                                operation="verify_domination", offending=k)
        log_ratio, images = _domination_ratio(system, sp.base_point, E, F, T)
        if log_ratio > worst:
            worst, worst_point = log_ratio, sp.base_point.tolist()
        cone_ok &= _cone_maps_inside(ConeSpec(E, F, alpha), images, np.exp(log_ratio))
    lam = float(np.exp(worst))
    return DominationReport(passed=bool(lam < 1.0), empirical_lambda=lam, T=T,
                            worst_point=worst_point, samples=len(splittings), alpha=alpha,
                            cone_invariant=bool(cone_ok), split_index=k,
                            splitting_source=source)


def _cone_maps_inside(cone, images, ratio):
    """Check Df^T(C^alpha_F(x)) lies in C^{alpha * ratio}_F(f^T x) on the boundary rays."""
    ye, le, yf, lf = images
    pe = np.linalg.lstsq(cone.E, np.eye(cone.E.shape[0]), rcond=None)[0]
    pf = np.linalg.lstsq(cone.F, np.eye(cone.F.shape[0]), rcond=None)[0]
    for ve, vf in cone.boundary_vectors():
        we = np.linalg.norm(ye @ (pe @ ve)) * np.exp(le - lf)
        wf = np.linalg.norm(yf @ (pf @ vf))
        if we > cone.alpha * ratio * wf * (1.0 + 1e-9):
            return False
    return True


def subbundle_log_det(system, x, n, i, splitting):
    """log|det Df^n_x restricted to F^i|."""
    return cocycle.restricted_log_det(system, x, n, splitting.bundle(i))


def grassmann_phi_gap(system, x, V, F_frame, n):
    """(1/n) (log|det Df^n|_V| - log|det Df^n|_F|), a Birkhoff average of the gap function."""
    V = np.asarray(V, dtype=float).reshape(system.dimension, -1)
    F_frame = np.asarray(F_frame, dtype=float).reshape(system.dimension, -1)
    if V.shape != F_frame.shape:
        raise ArgumentError("V and F must have the same dimension", module="splitting-tools",
                            operation="grassmann_phi_gap")
    x = systems.as_point(x, system.dimension)
    pair = np.stack([V, F_frame])
    vals = cocycle.restricted_log_det_batch(system, np.stack([x, x]), n, pair)
    return float((vals[0] - vals[1]) / n)


@dataclass
class GapStatistics:
    max_gap: float
    mean_gap: float
    worst_point: list
    n: int
    point_samples: int
    frame_samples: int
    bundle_dim: int
    seed: int
    splitting_source: str = "estimated"
    per_point_max: list = field(default_factory=list)

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "max_gap", "mean_gap", "worst_point", "n", "point_samples", "frame_samples",
            "bundle_dim", "seed", "splitting_source", "per_point_max")}


def random_frames(rng, count, d, k):
    """Orthonormalized Gaussian frames: uniform on the Grassmannian Gr(k, d)."""
    return orthonormalize(rng.standard_normal((count, d, k)))


def grassmann_gap_statistics(system, n, point_samples=100, frame_samples=20, seed=0,
                             dims=None, split_index=None, n_fwd=40, n_bwd=40):
    dims = _check_dims(system, dims)
    if n < 1:
        raise ArgumentError("n must be >= 1", module="splitting-tools",
                            operation="max_gap_over_grassmannian", offending=n)
    rng = seeding.stream(seed, "splitting-tools", "grassmann-points")
    pts = systems.sample_uniform(rng, point_samples, system.dimension)
    try:
        splits = estimate_splittings(system, pts, n_fwd, n_bwd, dims, seed)
        source = "estimated"
    except ConvergenceError:
        splits = [coordinate_splitting(p, dims) for p in pts]
        source = "coordinate-fallback"
    k = split_index if split_index is not None else default_split_index(dims)
    F = np.stack([sp.upper(k) for sp in splits])
    kdim = F.shape[2]
    frame_rng = seeding.stream(seed, "splitting-tools", "grassmann-frames")
    V = random_frames(frame_rng, point_samples * frame_samples, system.dimension, kdim)
    V = V.reshape(point_samples, frame_samples, system.dimension, kdim)
    frames = np.concatenate([F[:, None], V], axis=1).reshape(-1, system.dimension, kdim)
    base = np.repeat(pts, frame_samples + 1, axis=0)
    logs = cocycle.restricted_log_det_batch(system, base, n, frames)
    logs = logs.reshape(point_samples, frame_samples + 1)
    gaps = (logs[:, 1:] - logs[:, :1]) / n
    per_point = gaps.max(axis=1)
    worst = int(np.argmax(per_point))
    return GapStatistics(max_gap=float(per_point[worst]), mean_gap=float(gaps.mean()),
                         worst_point=pts[worst].tolist(), n=n, point_samples=point_samples,
                         frame_samples=frame_samples, bundle_dim=kdim, seed=seed,
                         splitting_source=source, per_point_max=per_point.tolist())


def max_gap_over_grassmannian(system, n, point_samples=100, frame_samples=20, seed=0,
                              dims=None, split_index=None):
    return grassmann_gap_statistics(system, n, point_samples, frame_samples, seed, dims,
                                    split_index).max_gap


def max_subbundle_rate_gap(system, n, point_samples=100, seed=0, dims=None):
    """Per-point |max_i log|det Df^n|_{F^i}| - log max_V |det Df^n|_V|| / n.

    Returns the array of per-point gaps; the bundle-level identity says its
    maximum tends to zero.
    """
    dims = _check_dims(system, dims)
    rng = seeding.stream(seed, "splitting-tools", "subbundle-points")
    pts = systems.sample_uniform(rng, point_samples, system.dimension)
    splits = estimate_splittings(system, pts, dims=dims, seed=seed)
    l = len(dims) - 2
    per_bundle = []
    for i in range(l + 1):
        frames = np.stack([sp.bundle(i) for sp in splits])
        per_bundle.append(cocycle.restricted_log_det_batch(system, pts, n, frames))
    best_bundle = np.max(np.stack(per_bundle), axis=0)
    _, log_sigma, _, _ = cocycle.accumulate_batch(system, pts, n)
    best_any = volume.max_subspace_log_det(log_sigma)
    return np.abs(best_bundle - best_any) / n
