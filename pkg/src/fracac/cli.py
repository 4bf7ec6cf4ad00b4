"""Command-line driver: ``fracac {converge,energy,circle,coarsen} [flags]``.

A ``--config`` file of ``key = value`` lines (keys spelled like the long flags,
``-`` or ``_`` both accepted) supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiments import (
    ExperimentError,
    RunConfig,
    RunStats,
    convergence_csv,
    run_circle,
    run_coarsening,
    run_convergence,
    run_energy_study,
)
from .history import SOEFitError
from .scheme import SchemeError

log = logging.getLogger("fracac")

# experiment-specific defaults, applied under config-file values and flags
DEFAULTS = {
    "converge": dict(eps2=0.01, T=1.0, M=8, nx=16),
    "energy": dict(eps2=0.001, T=50.0, dt=1.0, M=100, nx=64),
    "circle": dict(scheme="l1cn", eps2=1.0, C0=1000.0, T=30.0, dt=0.01, M=100, nx=128, alpha=1.0),
    "coarsen": dict(eps2=0.001, T=100.0, dt=0.01, M=100, nx=128),
}

EXAMPLES = {"1": "converge1", "2": "converge2", "self": "selfconv"}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file with defaults")
    p.add_argument("--scheme", choices=("l1", "l1cn", "l1plus"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps2", type=float)
    p.add_argument("--theta2", type=float)
    p.add_argument("--c0", dest="C0", type=float)
    p.add_argument("--M", type=int, help="steps of the graded part of the mesh")
    p.add_argument("--r", type=float, help="grading exponent (default: rate-optimal)")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--T1", type=float, help="end of the graded part")
    p.add_argument("--dt", type=float, help="uniform step after T1")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--bc", choices=("periodic", "neumann"))
    p.add_argument("--history", choices=("auto", "direct", "soe"))
    p.add_argument("--soe-tol", dest="soe_tol", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-residual", dest="check_residual", action="store_false", default=None,
                   help="skip the per-step residual check")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="temporal convergence study")
    _add_common(p)
    p.add_argument("--example", choices=tuple(EXAMPLES), default=None,
                   help="1: smooth periodic, 2: t^mu Neumann, self: self-convergence")
    p.add_argument("--Ms", type=_ints, help="doubling sequence of M, e.g. 8,16,32")

    p = sub.add_parser("energy", help="long-time energy study")
    _add_common(p)

    p = sub.add_parser("circle", help="shrinking-circle benchmark")
    _add_common(p)

    p = sub.add_parser("coarsen", help="coarsening from random data")
    _add_common(p)
    p.add_argument("--snapshots", type=_floats, dest="snapshot_times",
                   help="snapshot times, e.g. 0,5,20,50,100")
    return parser


_CONFIG_KEYS = {
    "scheme": str, "alpha": float, "eps2": float, "theta2": float, "c0": float,
    "m": int, "r": float, "t": float, "t1": float, "dt": float, "nx": int, "ny": int,
    "bc": str, "history": str, "soe_tol": float, "mu": float, "seed": int, "out": str,
    "example": str, "ms": _ints, "snapshots": _floats, "check_residual": None,
}
_CONFIG_DEST = {"c0": "C0", "m": "M", "t": "T", "t1": "T1", "ms": "Ms",
                "snapshots": "snapshot_times"}


def read_config(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        norm = key.replace("-", "_").lower()
        if norm not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        conv = _CONFIG_KEYS[norm]
        if conv is None:
            value = val.lower() in ("1", "true", "yes", "on")
        else:
            value = conv(val)
        # case matters for M/T/T1 in the dataclass but not in the file
        out[_CONFIG_DEST.get(norm, norm)] = value
    return out


def resolve(args: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS[args.command])
    if args.config is not None:
        values.update(read_config(args.config))
    for key, val in vars(args).items():
        if key in ("command", "config", "verbose") or val is None:
            continue
        values[key] = val

    example = values.pop("example", None)
    if args.command == "converge":
        experiment = EXAMPLES[example or "1"]
    else:
        experiment = {"energy": "energy_study", "circle": "circle", "coarsen": "coarsen"}[args.command]
    if args.command == "coarsen":
        values.setdefault("snapshot_times", (0.0, 5.0, 20.0, 50.0, 100.0))
    fields = set(RunConfig.__dataclass_fields__)
    unknown = set(values) - fields
    if unknown:
        raise ValueError(f"options not used by {args.command}: {sorted(unknown)}")
    return RunConfig(experiment=experiment, **values)


def _summary(stats: RunStats) -> str:
    return (f"{stats.steps} steps, max residual {stats.max_residual:.2e}, "
            f"min sigma {stats.min_sigma:.3e}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
    except (ValueError, OSError) as exc:
        print(f"fracac: configuration error: {exc}", file=sys.stderr)
        return 2

    stats = RunStats()
    try:
        if args.command == "converge":
            rows = run_convergence(cfg, stats)
            sys.stdout.write(convergence_csv(rows))
        elif args.command == "energy":
            report = run_energy_study(cfg, stats=stats)
            e = report.column("E_mod")
            print(f"modified energy {e[0]:.10g} -> {e[-1]:.10g} over {len(report) - 1} steps")
        elif args.command == "circle":
            res = run_circle(cfg, stats)
            if cfg.out is None:
                sys.stdout.write(res.to_csv())
            else:
                print(f"R^2 {res.R2[0]:.4f} -> {res.R2[-1]:.4f} at t = {res.t[-1]:g}")
        else:
            res = run_coarsening(cfg, stats)
            print(f"energy {res.report.rows[0].E:.6g} -> {res.report.rows[-1].E:.6g}; "
                  f"snapshots at {sorted(res.snapshots)}")
    except (ExperimentError, SchemeError, SOEFitError) as exc:
        print(f"fracac: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"fracac: invalid run: {exc}", file=sys.stderr)
        return 2
    if cfg.check_residual and stats.max_residual > 1e-10:
        print(f"fracac: step residual {stats.max_residual:.3e} exceeds 1e-10", file=sys.stderr)
        return 1
    log.info(_summary(stats))
    return 0


if __name__ == "__main__":
    sys.exit(main())
