"""Command-line front end.

    volgrow <command> --config <path> [--seed N] [--out <dir>]

Writes ``<out>/<command>.json`` (always) and ``<out>/<command>.csv`` for
tabular results.  Exit status: 0 success, 2 bad configuration or argument,
3 numerical failure, 4 convergence failure, 1 anything else; every failure
prints one JSON object ``{"error": {...}}`` on standard error.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bowen, cocycle, config as configmod, report, seeding, splitting, volume
from .errors import ArgumentError, ConfigError, ConvergenceError, NumericalError, VolgrowError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CONVERGENCE = 4


def _center(cfg):
    if cfg.center is not None:
        return np.array(cfg.center, dtype=float)
    rng = seeding.stream(cfg.seed, "cli-reporting", "center")
    return rng.random(cfg.system.dimension)


def _sampler(cfg):
    return volume.SamplerSpec(cfg.sampler, cfg.samples, cfg.seed)


def run_entropy_volume(cfg):
    curve = volume.growth_rate(cfg.system, cfg.n_list, _sampler(cfg))
    result = {"fitted_rate": curve.fitted_rate, "fit_residual": curve.fit_residual,
              "intercept": curve.intercept, "samples": [list(s) for s in curve.samples],
              "log_integrals": curve.log_integrals, "stderrs": curve.stderrs,
              "liminf_proxy": curve.liminf_proxy, "limsup_proxy": curve.limsup_proxy,
              "sample_count": curve.sample_count, "seed": curve.seed,
              "warnings": curve.warnings}
    rows = [(n, v, li, se) for (n, v), li, se in
            zip(curve.samples, curve.log_integrals, curve.stderrs)]
    return result, (("n", "normalized", "log_integral", "stderr"), rows)


def run_entropy_bowen(cfg):
    fn = bowen.spanning_entropy if cfg.method == "spanning" else bowen.separated_entropy
    est = fn(cfg.system, cfg.n, cfg.delta, cfg.resolution)
    return est.to_dict(), (("n", "value", "cover_size"), [(est.n, est.value, est.cover_size)])


def run_lyapunov(cfg):
    x = _center(cfg)
    est = cocycle.lyapunov_spectrum(cfg.system, x, cfg.n)
    result = {"exponents": est.exponents, "orbit_length": est.orbit_length,
              "base_point": est.base_point}
    rows = [(i + 1, v) for i, v in enumerate(est.exponents)]
    return result, (("index", "exponent"), rows)


def run_domination(cfg):
    rep = splitting.verify_domination(cfg.system, alpha=cfg.alpha, T=cfg.T,
                                      samples=cfg.points, seed=cfg.seed)
    return rep.to_dict(), None


def run_grassmann(cfg):
    stats = splitting.grassmann_gap_statistics(cfg.system, cfg.n, cfg.points, cfg.frames,
                                               cfg.seed)
    rows = [(i, g) for i, g in enumerate(stats.per_point_max)]
    return stats.to_dict(), (("point", "max_gap"), rows)


def run_ball_growth(cfg):
    rep = bowen.ball_volume_growth(cfg.system, _center(cfg), cfg.n_values, cfg.delta,
                                   bundle_choice=cfg.bundle, mc_count=cfg.mc_count,
                                   seed=cfg.seed, bundle_index=cfg.bundle_index,
                                   proposal=cfg.proposal)
    rows = list(zip(rep.n_values, rep.normalized_log_integrals, rep.accepted_fraction,
                    rep.unreliable))
    return rep.to_dict(), (("n", "normalized", "accepted_fraction", "unreliable"), rows)


def run_compare(cfg):
    curve = volume.growth_rate(cfg.system, cfg.n_list, _sampler(cfg))
    est = bowen.spanning_entropy(cfg.system, cfg.n, cfg.delta, cfg.resolution)
    comp = report.compare(curve.fitted_rate, est.value, cfg.tolerance,
                          cfg.system.exact_entropy, cfg.system.exact_note)
    result = comp.to_dict()
    result["volume_curve"] = {"samples": [list(s) for s in curve.samples],
                              "fit_residual": curve.fit_residual, "warnings": curve.warnings}
    result["bowen_estimate"] = est.to_dict()
    return result, None


COMMANDS = {
    "entropy-volume": run_entropy_volume,
    "entropy-bowen": run_entropy_bowen,
    "lyapunov": run_lyapunov,
    "domination": run_domination,
    "grassmann-check": run_grassmann,
    "ball-growth": run_ball_growth,
    "compare": run_compare,
}


def run(cfg):
    """Execute a validated config; returns the written file paths."""
    result, table = COMMANDS[cfg.command](cfg)
    paths = []
    base = os.path.join(cfg.out_dir, cfg.command)
    report.write_text(base + ".json", report.to_json(report.envelope(cfg.command, cfg, result)))
    paths.append(base + ".json")
    if table is not None and "csv" in cfg.formats:
        report.write_text(base + ".csv", report.to_csv(*table))
        paths.append(base + ".csv")
    return paths


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser():
    p = _Parser(
        prog="volgrow",
        description="Volume-growth and Bowen entropy experiments on torus maps.",
        epilog=configmod.__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("command", choices=configmod.COMMANDS)
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="override the output directory")
    return p


def _fail(err, code):
    sys.stderr.write(json.dumps({"error": report._clean(err)}, sort_keys=True) + "\n")
    return code


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return exc.code or 0
    except _UsageError as exc:
        return _fail({"kind": "usage", "message": str(exc), "module": "cli-reporting",
                      "operation": "parse_args",
                      "input": list(sys.argv[1:] if argv is None else argv)}, EXIT_CONFIG)
    try:
        cfg = configmod.load_config(args.config)
        if cfg.command != args.command:
            raise ConfigError([{"line": None, "message":
                                f"config command {cfg.command!r} does not match "
                                f"command line {args.command!r}"}])
        cfg = cfg.with_overrides(seed=args.seed, out_dir=args.out)
        for path in run(cfg):
            print(path)
        return 0
    except (ConfigError, ArgumentError) as exc:
        return _fail(exc.to_record(), EXIT_CONFIG)
    except ConvergenceError as exc:
        return _fail(exc.to_record(), EXIT_CONVERGENCE)
    except NumericalError as exc:
        return _fail(exc.to_record(), EXIT_NUMERICAL)
    except VolgrowError as exc:
        return _fail(exc.to_record(), 1)
    except Exception as exc:  # noqa: BLE001 - every failure must still be JSON
        return _fail({"kind": "internal", "message": f"{type(exc).__name__}: {exc}",
                      "module": "cli-reporting", "operation": "run", "input": None}, 1)


if __name__ == "__main__":
    sys.exit(main())
