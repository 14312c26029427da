"""Volume-growth side of the entropy formula.

The integrand max_V |det Df^n_x|_V| is the norm of the full exterior power
of Df^n_x, i.e. the product of all singular values above 1 (the empty
subspace contributes 1).  Integrals over the torus are taken in log form
with a max-shifted log-sum-exp, since exp(L) overflows once n*rate > 700.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import cocycle, seeding, systems
from .errors import ArgumentError

SAMPLER_MODES = ("monte_carlo", "grid")
# tail proxies that disagree by more than this trigger a warning
PROXY_SPREAD_WARN = 0.05


def _as_spectrum(log_sigma, operation):
    arr = np.asarray(log_sigma, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise ArgumentError("empty spectrum", module="volume-growth", operation=operation)
    if np.any(np.diff(arr, axis=-1) > 0):
        raise ArgumentError("log singular values must be sorted descending",
                            module="volume-growth", operation=operation,
                            offending=arr.tolist())
    return arr


def max_subspace_log_det(log_sigma):
    """log max_V |det A|_V| given the descending log singular values of A."""
    arr = _as_spectrum(log_sigma, "max_subspace_log_det")
    out = np.sum(np.maximum(arr, 0.0), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def fixed_dim_log_det_max(log_sigma, k):
    """log max over k-dimensional V of |det A|_V|: the top-k partial sum."""
    arr = _as_spectrum(log_sigma, "fixed_dim_log_det_max")
    d = arr.shape[-1]
    if not 0 <= k <= d:
        raise ArgumentError(f"k must lie in [0, {d}]", module="volume-growth",
                            operation="fixed_dim_log_det_max", offending=k)
    out = np.sum(arr[..., :k], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SamplerSpec:
    mode: str = "monte_carlo"
    count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in SAMPLER_MODES:
            raise ArgumentError(f"sampler mode must be one of {SAMPLER_MODES}",
                                module="volume-growth", operation="SamplerSpec",
                                offending=self.mode)
        if self.mode == "monte_carlo" and self.count < 1:
            raise ArgumentError("zero samples", module="volume-growth",
                                operation="SamplerSpec", offending=self.count)
        if self.mode == "grid" and self.count < 2:
            raise ArgumentError("grid resolution must be >= 2 per dimension",
                                module="volume-growth", operation="SamplerSpec",
                                offending=self.count)

    def points(self, dimension):
        if self.mode == "grid":
            return systems.grid_points(self.count, dimension)
        rng = seeding.stream(self.seed, "volume-growth", "samples")
        return systems.sample_uniform(rng, self.count, dimension)


def log_mean_exp(values):
    """log of the mean of exp(values) with the max-shift, plus its standard error.

    The standard error is the delta-method error of the log of the mean,
    estimated from the sample variance of exp(values - max).
    """
    values = np.asarray(values, dtype=float)
    count = values.size
    if count == 0:
        raise ArgumentError("zero samples", module="volume-growth", operation="integrate_growth")
    top = np.max(values)
    if not np.isfinite(top):
        return -np.inf, np.nan
    value = float(logsumexp(values) - np.log(count))
    weights = np.exp(values - top)
    mean = weights.mean()
    stderr = float(weights.std(ddof=1) / np.sqrt(count) / mean) if count > 1 else 0.0
    return value, stderr


def log_integrals(system, n_list, sampler):
    """``(log I_n, stderr)`` for each n, all from one pass over the same samples."""
    n_list = [int(n) for n in n_list]
    if any(n < 1 for n in n_list):
        raise ArgumentError("n must be >= 1", module="volume-growth",
                            operation="integrate_growth", offending=n_list)
    pts = sampler.points(system.dimension)
    _, _, _, recorded = cocycle.accumulate_batch(system, pts, max(n_list), record=n_list)
    return [log_mean_exp(max_subspace_log_det(recorded[n])) for n in n_list]


def integrate_growth(system, n, sampler):
    """log of the torus integral of max_V |det Df^n_x|_V| (normalized Haar measure)."""
    return log_integrals(system, [n], sampler)[0][0]


@dataclass
class GrowthCurve:
    samples: list
    fitted_rate: float
    fit_residual: float
    sample_count: int
    seed: int
    intercept: float = 0.0
    log_integrals: list = field(default_factory=list)
    stderrs: list = field(default_factory=list)
    liminf_proxy: float = 0.0
    limsup_proxy: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def n_values(self):
        return [n for n, _ in self.samples]

    @property
    def normalized(self):
        return [v for _, v in self.samples]


def growth_rate(system, n_list, sampler):
    n_list = [int(n) for n in n_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ArgumentError("n_list must be strictly increasing with at least 3 entries",
                            module="volume-growth", operation="growth_rate", offending=n_list)
    results = log_integrals(system, n_list, sampler)
    logs = np.array([v for v, _ in results])
    ns = np.array(n_list, dtype=float)
    slope, intercept = np.polyfit(ns, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * ns + intercept)) ** 2)))
    normalized = logs / ns
    tail = normalized[-max(1, len(ns) // 3):]
    curve = GrowthCurve(
        samples=[(n, float(v)) for n, v in zip(n_list, normalized)],
        fitted_rate=float(slope),
        fit_residual=residual,
        sample_count=sampler.count ** system.dimension if sampler.mode == "grid"
        else sampler.count,
        seed=sampler.seed,
        intercept=float(intercept),
        log_integrals=[float(v) for v in logs],
        stderrs=[float(e) for _, e in results],
        liminf_proxy=float(tail.min()),
        limsup_proxy=float(tail.max()),
    )
    spread = curve.limsup_proxy - curve.liminf_proxy
    if spread > PROXY_SPREAD_WARN:
        msg = (f"liminf/limsup proxies differ by {spread:.3g} over the tail; "
               "the sequence has not settled at these n")
        curve.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return curve
