"""Smooth maps of the torus T^d and their derivatives.

Points are float arrays with coordinates in [0, 1).  Every public function
accepts either a single point of shape ``(d,)`` or a batch ``(m, d)`` and
returns the matching shape.  Three families are built in:

* ``linear_toral``   x -> A x mod 1, A integer with |det A| = 1
* ``skew_product``   (x, y, z) -> (A(x, y), z + eps sin(2 pi x)) mod 1
* ``perturbed_cat``  (x, y) -> A(x, y) + eps (sin(2 pi y), 0) mod 1
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericalError

KINDS = ("linear_toral", "skew_product", "perturbed_cat")
MAX_DIMENSION = 4
TWO_PI = 2.0 * np.pi

# admissible perturbation: 2 pi eps < 0.5 keeps the linear cone field invariant
PERTURBATION_BOUND = 0.5
NEWTON_MAX_STEPS = 50
NEWTON_TOL = 1e-15

CAT_MATRIX = ((2, 1), (1, 1))


def wrap(x):
    """Reduce coordinates mod 1 into [0, 1).

    ``np.mod`` can return exactly 1.0 for tiny negative inputs, which would
    break the half-open interval, so those are folded back to 0.
    """
    r = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(r >= 1.0, 0.0, r)


def as_point(coords, dimension=None):
    x = wrap(coords)
    if x.ndim not in (1, 2):
        raise ArgumentError(f"expected a point or a batch of points, got shape {x.shape}",
                            module="manifold-systems", operation="as_point")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("non-finite coordinate", module="manifold-systems",
                            operation="as_point", offending=np.asarray(coords).tolist())
    if dimension is not None and x.shape[-1] != dimension:
        raise ArgumentError(
            f"point has dimension {x.shape[-1]}, system has dimension {dimension}",
            module="manifold-systems", operation="as_point",
            offending=np.asarray(coords).tolist(),
        )
    return x


def circle_distance(a, b):
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(diff, 1.0 - diff)


def torus_distance(x, y):
    """L-infinity product of circle distances; always in [0, 0.5]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ArgumentError("points have different dimensions", module="manifold-systems",
                            operation="torus_distance")
    return np.max(circle_distance(x, y), axis=-1)


def _integer_inverse(matrix):
    a = np.array(matrix, dtype=float)
    inv = np.rint(np.linalg.inv(a))
    if not np.array_equal(inv @ a, np.eye(len(a))):
        raise ArgumentError("matrix has no integer inverse", module="manifold-systems",
                            operation="SystemSpec")
    return inv


def expanding_log_sum(matrix):
    """Sum of log|eigenvalue| over eigenvalues outside the unit circle."""
    moduli = np.abs(np.linalg.eigvals(np.array(matrix, dtype=float)))
    return float(np.sum(np.log(moduli[moduli > 1.0])))


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    dimension: int
    matrix: tuple
    epsilon: float = 0.0
    exact_entropy: float = None
    exact_note: str = None
    _inverse: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        problems = validate_system(self.kind, self.dimension, self.matrix, self.epsilon)
        if problems:
            raise ArgumentError("; ".join(problems), module="manifold-systems",
                                operation="SystemSpec",
                                offending={"kind": self.kind, "matrix": self.matrix,
                                           "epsilon": self.epsilon})
        matrix = tuple(tuple(int(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "_inverse", _integer_inverse(matrix))

    @property
    def A(self):
        return np.array(self.matrix, dtype=float)

    @property
    def base_dimension(self):
        return len(self.matrix)

    @property
    def is_linear(self):
        return self.kind == "linear_toral" or self.epsilon == 0.0

    def to_dict(self):
        out = {"kind": self.kind, "dimension": self.dimension,
               "matrix": [list(r) for r in self.matrix], "epsilon": self.epsilon}
        if self.exact_entropy is not None:
            out["exact_entropy"] = self.exact_entropy
            out["exact_note"] = self.exact_note
        return out


def validate_system(kind, dimension, matrix, epsilon):
    """Return a list of human-readable constraint violations (empty if valid)."""
    problems = []
    if kind not in KINDS:
        return [f"kind must be one of {', '.join(KINDS)}, got {kind!r}"]
    try:
        a = np.array(matrix, dtype=float)
    except (TypeError, ValueError):
        return ["matrix must be a rectangular array of integers"]
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        return [f"matrix must be square, got shape {a.shape}"]
    if not np.all(np.isfinite(a)) or not np.array_equal(a, np.rint(a)):
        problems.append("matrix entries must be integers")
    elif abs(round(np.linalg.det(a))) != 1:
        problems.append(
            f"matrix must be unimodular (|det A| = 1), got |det A| = {abs(round(np.linalg.det(a)))}")
    base = a.shape[0]
    expected = {"linear_toral": base, "skew_product": 3, "perturbed_cat": 2}[kind]
    if kind != "linear_toral" and base != 2:
        problems.append(f"{kind} needs a 2x2 base matrix")
    if dimension != expected:
        problems.append(f"dimension must be {expected} for {kind}, got {dimension}")
    if not 1 <= dimension <= MAX_DIMENSION:
        problems.append(f"dimension must be between 1 and {MAX_DIMENSION}")
    if not np.isfinite(epsilon) or epsilon < 0:
        problems.append("epsilon must be a finite number >= 0")
    elif kind == "linear_toral" and epsilon != 0:
        problems.append("linear_toral takes no epsilon")
    elif kind == "perturbed_cat":
        if TWO_PI * epsilon >= PERTURBATION_BOUND:
            problems.append(f"perturbed_cat needs 2*pi*epsilon < {PERTURBATION_BOUND}")
        elif not problems:
            y = (np.arange(4096) + 0.5) / 4096
            det = round(np.linalg.det(a)) - TWO_PI * epsilon * np.cos(TWO_PI * y) * a[1, 0]
            if np.any(np.abs(det) < 1e-9) or np.any(np.sign(det) != np.sign(det[0])):
                problems.append("perturbed_cat Jacobian determinant vanishes on the check grid")
            inv = np.linalg.inv(a)
            if TWO_PI * epsilon * abs(inv[1, 0]) >= 1.0:
                problems.append("perturbed_cat epsilon too large for a monotone inverse")
    return problems


def linear_toral(matrix, exact_note=None):
    a = np.array(matrix)
    problems = validate_system("linear_toral", len(a), matrix, 0.0)
    if problems:
        raise ArgumentError("; ".join(problems), module="manifold-systems",
                            operation="linear_toral", offending=np.asarray(matrix).tolist())
    return SystemSpec(
        "linear_toral", len(a), tuple(map(tuple, a.tolist())),
        exact_entropy=expanding_log_sum(a),
        exact_note=exact_note or "sum of log|eigenvalue| over expanding eigenvalues of A",
    )


def cat_map():
    return linear_toral(CAT_MATRIX)


def identity_map(dimension=2):
    return linear_toral(np.eye(dimension, dtype=int), exact_note="identity map has zero entropy")


def skew_product(epsilon=0.0, matrix=CAT_MATRIX):
    return SystemSpec(
        "skew_product", 3, tuple(map(tuple, np.array(matrix).tolist())), epsilon,
        exact_entropy=expanding_log_sum(matrix),
        exact_note="fibre map is an isometric extension, entropy equals that of the base",
    )


def perturbed_cat(epsilon=0.05, matrix=CAT_MATRIX):
    return SystemSpec(
        "perturbed_cat", 2, tuple(map(tuple, np.array(matrix).tolist())), epsilon,
        exact_entropy=expanding_log_sum(matrix),
        exact_note="small perturbation of an Anosov automorphism is conjugate to it",
    )


def evaluate(system, x):
    x = as_point(x, system.dimension)
    a = system.A
    if system.kind == "linear_toral":
        return wrap(x @ a.T)
    if system.kind == "skew_product":
        out = np.empty_like(x)
        out[..., :2] = x[..., :2] @ a.T
        out[..., 2] = x[..., 2] + system.epsilon * np.sin(TWO_PI * x[..., 0])
        return wrap(out)
    out = x @ a.T
    out[..., 0] += system.epsilon * np.sin(TWO_PI * x[..., 1])
    return wrap(out)


def evaluate_inverse(system, x):
    x = as_point(x, system.dimension)
    inv = system._inverse
    if system.kind == "linear_toral":
        return wrap(x @ inv.T)
    if system.kind == "skew_product":
        out = np.empty_like(x)
        out[..., :2] = wrap(x[..., :2] @ inv.T)
        out[..., 2] = x[..., 2] - system.epsilon * np.sin(TWO_PI * out[..., 0])
        return wrap(out)
    return _perturbed_inverse(system, x)


def _perturbed_inverse(system, x):
    inv = system._inverse
    eps = system.epsilon
    u, v = x[..., 0], x[..., 1]
    shift = inv[1, 0] * u + inv[1, 1] * v
    y = np.array(shift, dtype=float)
    for _ in range(NEWTON_MAX_STEPS):
        g = y - shift + inv[1, 0] * eps * np.sin(TWO_PI * y)
        if np.all(np.abs(g) <= NEWTON_TOL):
            break
        y = y - g / (1.0 + TWO_PI * inv[1, 0] * eps * np.cos(TWO_PI * y))
    else:
        g = y - shift + inv[1, 0] * eps * np.sin(TWO_PI * y)
        if np.any(np.abs(g) > 1e-13):
            raise NumericalError("Newton inversion did not converge in 50 steps",
                                 module="manifold-systems", operation="evaluate_inverse",
                                 offending=np.asarray(x).tolist())
    xx = inv[0, 0] * (u - eps * np.sin(TWO_PI * y)) + inv[0, 1] * v
    return wrap(np.stack([xx, y], axis=-1))


def jacobian(system, x):
    """Analytic derivative Df_x, shape ``(d, d)`` or ``(m, d, d)``."""
    x = as_point(x, system.dimension)
    d = system.dimension
    jac = np.empty(x.shape[:-1] + (d, d))
    if system.kind == "linear_toral":
        jac[...] = system.A
    elif system.kind == "skew_product":
        jac[...] = 0.0
        jac[..., :2, :2] = system.A
        jac[..., 2, 0] = TWO_PI * system.epsilon * np.cos(TWO_PI * x[..., 0])
        jac[..., 2, 2] = 1.0
    else:
        jac[...] = system.A
        jac[..., 0, 1] += TWO_PI * system.epsilon * np.cos(TWO_PI * x[..., 1])
    return jac


def orbit(system, x, n):
    """Points x, f(x), ..., f^{n-1}(x) stacked on a new axis -2."""
    x = as_point(x, system.dimension)
    out = np.empty(x.shape[:-1] + (n, system.dimension))
    for i in range(n):
        out[..., i, :] = x
        x = evaluate(system, x)
    return out


def sample_uniform(rng, count, dimension):
    return wrap(rng.random((count, dimension)))


def grid_points(resolution, dimension):
    """Open grid of cell midpoints in lexicographic order."""
    g = (np.arange(resolution) + 0.5) / resolution
    mesh = np.meshgrid(*([g] * dimension), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, dimension)


def default_dims(system):
    """Block dimensions (s, 1, ..., 1, u) for the built-in splittings."""
    if system.kind == "skew_product":
        return (1, 1, 1)
    moduli = np.abs(np.linalg.eigvals(system.A))
    s = int(np.sum(moduli < 1 - 1e-12))
    u = int(np.sum(moduli > 1 + 1e-12))
    c = system.dimension - s - u
    return (s,) + (1,) * c + (u,)
