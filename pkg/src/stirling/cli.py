"""Command-line front end.

Every command writes machine-readable CSV/JSON into ``--out`` (default:
current directory) and is deterministic: identical inputs give byte-identical
files.  Scientific negatives (no cycle, no sign change at a grid point) exit
0; only configuration or numerical failures exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import TWO_PI, EngineParams
from .dynamics import IntegrationError, integrate
from .equilibria import (
    GridResolutionError,
    find_equilibria,
    pitchfork_locus,
    write_equilibria_csv,
    write_pitchfork_csv,
)
from .bifurcations import (
    BifurcationCurve,
    continuation,
    mirror_curve,
    write_curve_csv,
    write_failure_log,
)
from .cycles import (
    CycleSolverError,
    find_limit_cycle,
    power_map,
    ridge_locus,
    write_cycle_csv,
    write_cycle_json,
    write_power_csv,
    write_ridge_csv,
)

_G = "%.17g"


def _base_params(args) -> EngineParams:
    if args.config is not None:
        params = EngineParams.from_json(Path(args.config).read_text(encoding="utf-8"))
    else:
        params = EngineParams()
    overrides = {}
    if getattr(args, "alpha", None) is not None:
        overrides["alpha"] = args.alpha
    if getattr(args, "th", None) is not None:
        overrides["t_h"] = args.th
    return params.with_(**overrides) if overrides else params


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0.0 or hi < lo:
        raise ValueError("grid requires step > 0 and max >= min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 12) for k in range(n)]


def cmd_simulate(args, out: Path) -> int:
    params = _base_params(args)
    traj = integrate((args.q0, args.w0), params, args.tmax,
                     tol=args.tol_rel, atol=args.tol_abs)
    path = out / "trajectory.csv"
    traj.to_csv(path)
    print(path)
    return 0


def cmd_equilibria(args, out: Path) -> int:
    params = _base_params(args)
    eqs = find_equilibria(params)
    path = out / "equilibria.csv"
    write_equilibria_csv(path, [(params.alpha, params.t_h, e) for e in eqs])
    print(path)
    return 0


def cmd_local_diagram(args, out: Path) -> int:
    params = _base_params(args)
    rows = []
    for a in _grid(args.alpha_min, args.alpha_max, args.alpha_step):
        pa = params.with_(alpha=a % TWO_PI)
        try:
            rows.extend((a, params.t_h, e) for e in find_equilibria(pa))
        except GridResolutionError:
            pass  # grid point is on a degenerate locus; skip the column
    path = out / "local_diagram.csv"
    write_equilibria_csv(path, rows)
    print(path)
    return 0


def cmd_continue(args, out: Path) -> int:
    params = _base_params(args)
    alphas = _grid(args.alpha_min, args.alpha_max, args.alpha_step)
    if args.kind == "pitchfork":
        pts = pitchfork_locus(alphas, (args.th_min, args.th_max), params)
        path = out / "pitchfork.csv"
        write_pitchfork_csv(path, pts)
        print(path)
        return 0
    curve = continuation(args.kind, alphas, params,
                         t_h_range=(args.th_min, args.th_max))
    mirrored = mirror_curve(curve)
    path = out / f"curve_{args.kind}.csv"
    write_curve_csv(path, [curve, mirrored])
    flog = out / f"curve_{args.kind}_failures.csv"
    write_failure_log(flog, [curve])
    print(path)
    n_total = len(alphas)
    n_fail = len(curve.failures)
    if n_fail > 0.1 * n_total:
        print(f"error: {n_fail}/{n_total} grid points failed", file=sys.stderr)
        return 1
    return 0


def cmd_cycle(args, out: Path) -> int:
    params = _base_params(args)
    cycle = find_limit_cycle(params, tol=args.tol_rel)
    jpath = out / "cycle.json"
    if cycle is None:
        doc = {"alpha": params.alpha, "t_h": params.t_h, "has_cycle": False}
        jpath.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
        print(jpath)
        return 0
    write_cycle_csv(out / "cycle.csv", cycle, params)
    write_cycle_json(jpath, cycle, params)
    print(out / "cycle.csv")
    print(jpath)
    return 0


def cmd_power_map(args, out: Path) -> int:
    params = _base_params(args)
    alphas = None
    t_hs = None
    if args.alpha_min is not None:
        alphas = _grid(args.alpha_min, args.alpha_max, args.alpha_step)
    if args.th_min is not None:
        t_hs = _grid(args.th_min, args.th_max, args.th_step)
    records = power_map(alphas, t_hs, params, workers=args.workers)
    write_power_csv(out / "power_map.csv", records)
    write_ridge_csv(out / "ridge.csv", ridge_locus(records))
    print(out / "power_map.csv")
    print(out / "ridge.csv")
    return 0


def cmd_classify(args, out: Path) -> int:
    params = _base_params(args)
    eqs = find_equilibria(params)
    counts: dict[str, int] = {}
    for e in eqs:
        counts[e.kind] = counts.get(e.kind, 0) + 1
    cycle = find_limit_cycle(params)
    doc = {
        "alpha": params.alpha,
        "t_h": params.t_h,
        "equilibria": [
            {"q_star": e.q_star, "kind": e.kind, "tau_prime": e.tau_prime}
            for e in eqs
        ],
        "counts": counts,
        "has_cycle": cycle is not None,
        "direction": None if cycle is None else int(cycle.direction_sign),
    }
    if cycle is not None:
        doc["period"] = cycle.period
        doc["avg_power"] = cycle.avg_power
    path = out / "classify.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(path)
    return 0


def _add_common(sp, *, alpha=False, th=False):
    if alpha:
        sp.add_argument("--alpha", type=float, default=None,
                        help="phase shift between cylinders, rad")
    if th:
        sp.add_argument("--th", type=float, default=None,
                        help="hot-side temperature, K")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stirling",
        description="Alpha-Stirling engine dynamics: equilibria, bifurcation "
                    "curves, limit cycles and power maps.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", default=None, metavar="PATH",
                    help="JSON file with engine parameters")
    ap.add_argument("--out", default=".", metavar="DIR",
                    help="output directory (created if missing)")
    ap.add_argument("--tol-rel", type=float, default=None,
                    help="relative integration tolerance")
    ap.add_argument("--tol-abs", type=float, default=None,
                    help="absolute integration tolerance")
    ap.add_argument("--workers", type=int, default=1,
                    help="process count for sweep commands")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate one trajectory")
    _add_common(sp, alpha=True, th=True)
    sp.add_argument("--q0", type=float, default=3.0, help="initial angle, rad")
    sp.add_argument("--w0", type=float, default=0.0, help="initial rate, rad/s")
    sp.add_argument("--tmax", type=float, default=100.0, help="duration, s")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibria", help="equilibria at one (alpha, t_h)")
    _add_common(sp, alpha=True, th=True)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("local-diagram",
                        help="equilibria swept over alpha at fixed t_h")
    _add_common(sp, th=True)
    sp.add_argument("--alpha-min", type=float, default=0.0)
    sp.add_argument("--alpha-max", type=float, default=TWO_PI)
    sp.add_argument("--alpha-step", type=float, default=0.01)
    sp.set_defaults(func=cmd_local_diagram)

    sp = sub.add_parser("continue", help="continue a bifurcation curve")
    sp.add_argument("--kind", required=True,
                    choices=("homoclinic", "heteroclinic", "pitchfork"))
    sp.add_argument("--alpha-min", type=float, default=0.05)
    sp.add_argument("--alpha-max", type=float, default=3.10)
    sp.add_argument("--alpha-step", type=float, default=0.05)
    sp.add_argument("--th-min", type=float, default=300.0)
    sp.add_argument("--th-max", type=float, default=500.0)
    sp.set_defaults(func=cmd_continue)

    sp = sub.add_parser("cycle", help="limit cycle at one (alpha, t_h)")
    _add_common(sp, alpha=True, th=True)
    sp.set_defaults(func=cmd_cycle)

    sp = sub.add_parser("power-map", help="average power over a grid")
    sp.add_argument("--alpha-min", type=float, default=None)
    sp.add_argument("--alpha-max", type=float, default=3.1)
    sp.add_argument("--alpha-step", type=float, default=0.1)
    sp.add_argument("--th-min", type=float, default=None)
    sp.add_argument("--th-max", type=float, default=500.0)
    sp.add_argument("--th-step", type=float, default=5.0)
    sp.set_defaults(func=cmd_power_map)

    sp = sub.add_parser("classify", help="equilibrium census plus cycle flag")
    _add_common(sp, alpha=True, th=True)
    sp.set_defaults(func=cmd_classify)

    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(args, out)
    except (ValueError, IntegrationError, CycleSolverError,
            GridResolutionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
