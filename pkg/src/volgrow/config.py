"""Experiment configuration files.

Grammar (UTF-8 text, one statement per line)::

    # comment                      blank lines and '#'/';' comments are ignored
    [section]                      one of: system, experiment, output
    key = value                    value runs to end of line; lists are comma-separated

[system]
    kind        linear_toral | skew_product | perturbed_cat       (required)
    dimension   integer; inferred from kind and matrix when omitted
    row1..rowN  integer matrix rows, e.g. ``row1 = 2, 1``; required for
                linear_toral, defaults to the cat matrix otherwise
    epsilon     perturbation size, default 0

[experiment]
    command     entropy-volume | entropy-bowen | lyapunov | domination |
                grassmann-check | ball-growth | compare          (required)
    seed        non-negative integer, default 0
    n_list      increasing integers (>= 3 of them), default 10, 20, 30, 40, 50
    n           orbit length; default 12 (bowen/compare), 10000 (lyapunov),
                200 (grassmann-check)
    delta       0 < delta < 0.5; default 0.05 (d = 2) or 0.08 (d >= 3)
    sampler     monte_carlo | grid, default monte_carlo
    samples     Monte-Carlo count or grid resolution per axis, default 10000
    resolution  grid resolution per axis for covers; default 1024 (d = 2) or 128
    method      spanning | separated, default spanning
    tolerance   compare tolerance, default 0.1
    alpha, T    cone width and domination time, default 1.0 and 1
    points      sampled base points, default 100 (grassmann) / 32 (domination)
    frames      sampled frames per point, default 20
    center      point coordinates; default a seeded uniform point
    n_values    orbit lengths for ball-growth, default 8, 10, ..., 20
    bundle      max_over_V | fixed_F_i | max_over_F_i, default max_over_V
    bundle_index  i for fixed_F_i
    mc_count    ball-growth sample count (>= 100), default 10000
    proposal    ball | shadowing, default ball

[output]
    dir         report directory, default ``.``
    formats     subset of json, csv; json is always written

Every problem in a file is collected and reported together with its line
number; nothing is silently defaulted when a key is misspelt.
"""

import re
from dataclasses import dataclass, field, fields

from . import systems
from .errors import ConfigError

COMMANDS = ("entropy-volume", "entropy-bowen", "lyapunov", "domination", "grassmann-check",
            "ball-growth", "compare")
SECTIONS = ("system", "experiment", "output")
SYSTEM_KEYS = ("kind", "dimension", "epsilon")
EXPERIMENT_KEYS = ("command", "seed", "n_list", "n", "delta", "sampler", "samples",
                   "resolution", "method", "tolerance", "alpha", "T", "points", "frames",
                   "center", "n_values", "bundle", "bundle_index", "mc_count", "proposal")
OUTPUT_KEYS = ("dir", "formats")
ROW_KEY = re.compile(r"row([1-9][0-9]*)$")
HEADER = re.compile(r"\[\s*([A-Za-z_][\w-]*)\s*\]$")

DEFAULT_N_LIST = (10, 20, 30, 40, 50)
DEFAULT_N = {"lyapunov": 10_000, "grassmann-check": 200}
DEFAULT_BALL_N = tuple(range(8, 21, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    system: systems.SystemSpec
    command: str
    seed: int = 0
    n_list: tuple = DEFAULT_N_LIST
    n: int = 12
    delta: float = 0.05
    sampler: str = "monte_carlo"
    samples: int = 10_000
    resolution: int = 1024
    method: str = "spanning"
    tolerance: float = 0.1
    alpha: float = 1.0
    T: int = 1
    points: int = 100
    frames: int = 20
    center: tuple = None
    n_values: tuple = DEFAULT_BALL_N
    bundle: str = "max_over_V"
    bundle_index: int = None
    mc_count: int = 10_000
    proposal: str = "ball"
    out_dir: str = "."
    formats: tuple = ("json", "csv")

    def experiment_items(self):
        """(key, value) pairs of the [experiment] section in canonical order."""
        skip = {"system", "out_dir", "formats"}
        return [(f.name, getattr(self, f.name)) for f in fields(self) if f.name not in skip]

    def to_dict(self):
        out = {"system": self.system.to_dict(), "out_dir": self.out_dir,
               "formats": list(self.formats)}
        for key, value in self.experiment_items():
            out[key] = list(value) if isinstance(value, tuple) else value
        return out

    def with_overrides(self, seed=None, out_dir=None):
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        if seed is not None:
            if seed < 0:
                raise ConfigError([{"line": None, "message": "seed must be >= 0"}])
            kw["seed"] = int(seed)
        if out_dir is not None:
            kw["out_dir"] = str(out_dir)
        return ExperimentConfig(**kw)


# value parsers: each takes the raw string and returns a value or raises ValueError

def _int(text):
    if not re.fullmatch(r"[+-]?\d+", text.strip()):
        raise ValueError(f"expected an integer, got {text.strip()!r}")
    return int(text)


def _float(text):
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text.strip()!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("expected a finite number")
    return value


def _list(parse):
    def inner(text):
        items = [t.strip() for t in text.split(",")]
        if not items or any(t == "" for t in items):
            raise ValueError("expected a comma-separated list with no empty items")
        return tuple(parse(t) for t in items)
    return inner


def _choice(options):
    def inner(text):
        value = text.strip()
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {value!r}")
        return value
    return inner


def _text(text):
    value = text.strip()
    if not value:
        raise ValueError("empty value")
    return value


PARSERS = {
    ("system", "kind"): _choice(systems.KINDS),
    ("system", "dimension"): _int,
    ("system", "epsilon"): _float,
    ("experiment", "command"): _choice(COMMANDS),
    ("experiment", "seed"): _int,
    ("experiment", "n_list"): _list(_int),
    ("experiment", "n"): _int,
    ("experiment", "delta"): _float,
    ("experiment", "sampler"): _choice(("monte_carlo", "grid")),
    ("experiment", "samples"): _int,
    ("experiment", "resolution"): _int,
    ("experiment", "method"): _choice(("spanning", "separated")),
    ("experiment", "tolerance"): _float,
    ("experiment", "alpha"): _float,
    ("experiment", "T"): _int,
    ("experiment", "points"): _int,
    ("experiment", "frames"): _int,
    ("experiment", "center"): _list(_float),
    ("experiment", "n_values"): _list(_int),
    ("experiment", "bundle"): _choice(("max_over_V", "fixed_F_i", "max_over_F_i")),
    ("experiment", "bundle_index"): _int,
    ("experiment", "mc_count"): _int,
    ("experiment", "proposal"): _choice(("ball", "shadowing")),
    ("output", "dir"): _text,
    ("output", "formats"): _list(_choice(("json", "csv"))),
}


def _tokenize(text, failures):
    """Map (section, key) -> (raw value, line number); records syntax problems."""
    entries = {}
    section = None
    section_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        head = HEADER.match(line)
        if head:
            section = head.group(1).lower()
            if section not in SECTIONS:
                failures.append({"line": lineno, "message":
                                 f"unknown section [{section}] (expected one of "
                                 f"{', '.join(SECTIONS)})"})
                section = "?"
            elif section in section_lines:
                failures.append({"line": lineno, "message":
                                 f"duplicate section [{section}] (first at line "
                                 f"{section_lines[section]})"})
            else:
                section_lines[section] = lineno
            continue
        if "=" not in line:
            failures.append({"line": lineno, "message": f"expected 'key = value', got {line!r}"})
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if section is None:
            failures.append({"line": lineno, "message": f"key {key!r} appears before any section"})
            continue
        if section == "?":
            continue
        allowed = {"system": SYSTEM_KEYS, "experiment": EXPERIMENT_KEYS,
                   "output": OUTPUT_KEYS}[section]
        if key not in allowed and not (section == "system" and ROW_KEY.match(key)):
            failures.append({"line": lineno, "message": f"unknown key {key!r} in [{section}]"})
            continue
        if (section, key) in entries:
            failures.append({"line": lineno, "message":
                             f"duplicate key {key!r} (first at line "
                             f"{entries[(section, key)][1]})"})
            continue
        entries[(section, key)] = (value, lineno)
    return entries, section_lines


def parse_config(text):
    """Parse and validate config text; raises ConfigError listing every failure."""
    failures = []
    entries, section_lines = _tokenize(text, failures)
    values = {}
    for (section, key), (raw, lineno) in entries.items():
        if section == "system" and ROW_KEY.match(key):
            parser = _list(_int)
        else:
            parser = PARSERS[(section, key)]
        try:
            values[(section, key)] = parser(raw)
        except ValueError as exc:
            failures.append({"line": lineno, "message": f"{key}: {exc}"})
    for section, key in (("system", "kind"), ("experiment", "command")):
        if (section, key) not in entries:
            failures.append({"line": section_lines.get(section),
                             "message": f"missing required key {key!r} in [{section}]"})
    system = _build_system(values, entries, section_lines, failures)
    config = None
    if ("experiment", "command") in values:
        # validated even when [system] is broken so every failure is reported
        config = _build_experiment(system, values, entries, section_lines, failures)
    if failures:
        failures.sort(key=lambda f: (f["line"] is None, f["line"] or 0))
        raise ConfigError(failures)
    return config


def _build_system(values, entries, section_lines, failures):
    kind = values.get(("system", "kind"))
    if kind is None:
        return None
    here = section_lines.get("system")
    rows = sorted((int(ROW_KEY.match(k).group(1)), k) for (s, k) in entries
                  if s == "system" and ROW_KEY.match(k))
    row_line = entries[("system", rows[0][1])][1] if rows else here
    if [i for i, _ in rows] != list(range(1, len(rows) + 1)):
        failures.append({"line": row_line, "message": "matrix rows must be row1, row2, ... "
                         "with no gaps"})
        return None
    if any(("system", k) not in values for _, k in rows):
        return None
    if rows:
        matrix = tuple(values[("system", k)] for _, k in rows)
    elif kind == "linear_toral":
        failures.append({"line": here, "message": "linear_toral needs matrix rows row1..rowN"})
        return None
    else:
        matrix = systems.CAT_MATRIX
    if len({len(r) for r in matrix}) != 1 or len(matrix[0]) != len(matrix):
        failures.append({"line": row_line, "message":
                         f"matrix must be square, got rows of lengths "
                         f"{[len(r) for r in matrix]} for {len(matrix)} rows"})
        return None
    natural = {"linear_toral": len(matrix), "skew_product": 3, "perturbed_cat": 2}[kind]
    dimension = values.get(("system", "dimension"), natural)
    epsilon = values.get(("system", "epsilon"), 0.0)
    problems = systems.validate_system(kind, dimension, matrix, epsilon)
    for problem in problems:
        if "unimodular" in problem or "matrix" in problem:
            line = row_line
        elif "dimension" in problem and ("system", "dimension") in entries:
            line = entries[("system", "dimension")][1]
        elif "epsilon" in problem and ("system", "epsilon") in entries:
            line = entries[("system", "epsilon")][1]
        else:
            line = here
        failures.append({"line": line, "message": problem})
    if problems:
        return None
    if kind == "linear_toral":
        return systems.linear_toral(matrix)
    if kind == "skew_product":
        return systems.skew_product(epsilon, matrix)
    return systems.perturbed_cat(epsilon, matrix)


def _build_experiment(system, values, entries, section_lines, failures):
    from .bowen import DEFAULT_RESOLUTION, default_delta

    d = system.dimension if system is not None else values.get(("system", "dimension"), 2)
    command = values[("experiment", "command")]
    kw = {"system": system, "command": command}
    for key in EXPERIMENT_KEYS[1:]:
        if ("experiment", key) in values:
            kw[key] = values[("experiment", key)]
    if ("output", "dir") in values:
        kw["out_dir"] = values[("output", "dir")]
    if ("output", "formats") in values:
        kw["formats"] = tuple(dict.fromkeys(("json",) + values[("output", "formats")]))
    kw.setdefault("delta", default_delta(d))
    kw.setdefault("resolution", DEFAULT_RESOLUTION.get(d, 128))
    kw.setdefault("n", DEFAULT_N.get(command, 12))
    kw.setdefault("points", 32 if command == "domination" else 100)
    if "center" in kw:
        kw["center"] = tuple(float(c) for c in kw["center"])

    def line_of(key):
        if ("experiment", key) in entries:
            return entries[("experiment", key)][1]
        return section_lines.get("experiment")

    def need(ok, key, message):
        if not ok:
            failures.append({"line": line_of(key), "message": f"{key}: {message}"})

    cfg = ExperimentConfig(**kw)
    need(cfg.seed >= 0, "seed", "must be >= 0")
    need(0.0 < cfg.delta < 0.5, "delta", "constraint delta < 0.5 (and delta > 0) violated")
    need(cfg.n >= 1, "n", "must be >= 1")
    need(len(cfg.n_list) >= 3 and all(a >= 1 for a in cfg.n_list)
         and all(b > a for a, b in zip(cfg.n_list, cfg.n_list[1:])),
         "n_list", "must be at least 3 strictly increasing positive integers")
    need(cfg.samples >= (2 if cfg.sampler == "grid" else 1), "samples",
         "must be >= 1 (>= 2 for grid)")
    need(cfg.resolution >= 2, "resolution", "must be >= 2")
    if command in ("entropy-bowen", "compare") and 0.0 < cfg.delta < 0.5:
        need(cfg.resolution * cfg.delta >= 10, "resolution",
             "grid needs at least 10 points per delta (resolution * delta >= 10)")
    need(cfg.tolerance > 0, "tolerance", "must be > 0")
    need(cfg.alpha > 0, "alpha", "must be > 0")
    need(cfg.T >= 1, "T", "must be >= 1")
    need(cfg.points >= 1, "points", "must be >= 1")
    need(cfg.frames >= 1, "frames", "must be >= 1")
    need(cfg.center is None or len(cfg.center) == d, "center", f"needs {d} coordinates")
    need(len(cfg.n_values) >= 1 and min(cfg.n_values) >= 1, "n_values",
         "must be positive integers")
    need(cfg.mc_count >= 100, "mc_count", "must be >= 100")
    need(cfg.bundle != "fixed_F_i" or cfg.bundle_index is not None, "bundle_index",
         "required when bundle = fixed_F_i")
    if cfg.bundle_index is not None and system is not None:
        centres = len(systems.default_dims(system)) - 2
        need(0 <= cfg.bundle_index <= centres, "bundle_index",
             f"must lie in [0, {centres}] for this system")
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError([{"line": None, "message": f"cannot read {path}: {exc}"}]) from None
    return parse_config(text)


def _fmt(value):
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(config):
    """Canonical text form; parse_config(serialize(c)) == c."""
    s = config.system
    out = ["[system]", f"kind = {s.kind}", f"dimension = {s.dimension}"]
    out += [f"row{i} = {_fmt(row)}" for i, row in enumerate(s.matrix, start=1)]
    if s.kind != "linear_toral":
        out.append(f"epsilon = {_fmt(s.epsilon)}")
    out += ["", "[experiment]"]
    for key, value in config.experiment_items():
        if value is not None:
            out.append(f"{key} = {_fmt(value)}")
    out += ["", "[output]", f"dir = {config.out_dir}", f"formats = {_fmt(config.formats)}"]
    return "\n".join(out) + "\n"

