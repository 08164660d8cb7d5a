"""Command-line front end.

    dfmpc run --example crane --out runs/crane
    dfmpc run --example crane --subset 1 --nev 200 --out runs/crane-subset
    dfmpc teval --example crane --period 0.5
    dfmpc openloop --example cancer --out runs/ol

Exit codes: 0 success, 1 usage error, 2 runtime or validation error,
3 diverged simulation (the partial log is still written).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cases import SCENARIOS, Scenario, get_scenario
from .problem import DimensionChangeError, ProblemValidationError
from .simulation import ClosedLoopLog, SimulationDiverged, simulate_ol
from .solver import write_trace_csv

log = logging.getLogger("dfmpc")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_subset(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        idx = [int(t) for t in items]
    except ValueError:
        raise UsageError(f"--subset expects 1-based integers, got {text!r}") from None
    if any(i < 1 for i in idx):
        raise UsageError("--subset indices are 1-based")
    return [i - 1 for i in idx]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"override value {text!r} is not valid JSON") from None


def apply_override(sc: Scenario, path: str, value) -> None:
    """Set a dot-path such as ``ocp.rd``, ``plant.w`` or ``trust.beta_plus``.

    ``ode.*`` changes both the plant and the engine's nominal record.
    Fields fixing the decision-vector size (``uparam.Np``, ``uparam.np``) are
    rejected.
    """
    root, _, name = path.partition(".")
    defn = sc.definition
    if root in ("Nev", "nev") and not name:
        sc.Nev = int(value)
        return
    if root == "tsim" and not name:
        sc.tsim = float(value)
        return
    if not name:
        raise UsageError(f"invalid override path {path!r}")
    if root == "trust":
        fields = {f.name for f in dataclasses.fields(sc.trust)}
        if name not in fields:
            raise UsageError(f"invalid override path {path!r}")
        sc.trust = dataclasses.replace(sc.trust, **{name: value})
        return
    targets = {
        "ode": [defn.ode, sc.plant_ode],
        "plant": [sc.plant_ode],
        "uparam": [defn.uparam],
        "ocp": [defn.ocp],
    }.get(root)
    if targets is None or name not in targets[0]:
        raise UsageError(f"invalid override path {path!r}")
    if root == "uparam" and name in ("Np", "np"):
        raise DimensionChangeError(
            f"uparam.{name} cannot be changed since it changes the number of decision variables"
        )
    for rec in targets:
        setattr(rec, name, value)


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict) or "example" not in cfg:
        raise UsageError("config must be a JSON object with an 'example' key")
    return cfg


def _resolve(args) -> "tuple[Scenario, dict]":
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    name = args.example or cfg.get("example")
    if name is None:
        raise UsageError("one of --example or --config is required")
    try:
        sc = get_scenario(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None

    overrides = dict(cfg.get("overrides", {}))
    for item in getattr(args, "override", None) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--override expects key=value, got {item!r}")
        overrides[key.strip()] = _parse_value(val)
    for key, val in overrides.items():
        apply_override(sc, key, val)

    settings = {"example": name}
    tsim = getattr(args, "tsim", None) or cfg.get("tsim")
    if tsim is not None:
        sc.tsim = float(tsim)
    nev = getattr(args, "nev", None) or cfg.get("nev")
    if nev is not None:
        sc.Nev = int(nev)
    rk = getattr(args, "rk_order", None) or cfg.get("rk_order")
    if rk is not None:
        sc.engine_rk_order = int(rk)
    subset = getattr(args, "subset", None) or cfg.get("subset")
    if subset is not None:
        sc.subset = _parse_subset(subset)
    if sc.subset is not None and any(i >= int(sc.definition.uparam.np) for i in sc.subset):
        raise UsageError(f"--subset indices must lie within 1..{sc.definition.uparam.np}")
    settings["overrides"] = overrides
    return sc, settings


def _trust_dict(sc: Scenario) -> dict:
    out = dataclasses.asdict(sc.trust)
    out["alpha_min"] = np.asarray(out["alpha_min"]).tolist()
    return out


def _plot_script(log_: ClosedLoopLog) -> str:
    nx, nu = log_.xx.shape[1], log_.uu.shape[1]
    lines = [
        "# gnuplot -persist plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set multiplot layout {nx + nu},1",
    ]
    for k in range(nx):
        lines.append(f"plot 'closedloop.csv' using 1:{k + 2} with lines")
    for k in range(nu):
        lines.append(f"plot 'closedloop.csv' using 1:{nx + k + 2} with steps")
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    sc, settings = _resolve(args)
    if args.seed is not None:
        warnings.warn("--seed is ignored: the controller is deterministic", stacklevel=1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    engine, teval = sc.build()

    def progress(i, n):
        if i % 50 == 0 or i == n:
            log.info("%s: step %d/%d", sc.name, i, n)

    code = EXIT_OK
    try:
        result = sc.run(engine, progress=progress, trace_last=args.trace)
    except SimulationDiverged as exc:
        log.error("%s", exc)
        result, code = exc.log, EXIT_DIVERGED
    runtime = time.perf_counter() - t0

    result.to_csv(out / "closedloop.csv", timing=False)
    if args.trace and result.last_trace:
        write_trace_csv(out / "trace.csv", result.last_trace)
    (out / "plot.gp").write_text(_plot_script(result))
    meta = {
        **settings,
        "scenario": sc.name,
        "created": datetime.now(timezone.utc).isoformat(),
        "tsim": sc.tsim,
        "Nev": sc.Nev,
        "engine_rk_order": result.engine_rk_order,
        "plant_rk_order": result.plant_rk_order,
        "subset": None if sc.subset is None else [i + 1 for i in sc.subset],
        "trust": _trust_dict(sc),
        "ode": sc.definition.ode.to_dict(),
        "uparam": sc.definition.uparam.to_dict(),
        "ocp": sc.definition.ocp.to_dict(),
        "plant": sc.plant_ode.to_dict(),
        "teval": teval,
        "runtime": runtime,
        "ntsim": result.ntsim,
        "diverged": result.diverged,
        "t_exec": result.t_exec.tolist(),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2))
    print(f"wrote {out / 'closedloop.csv'} ({result.ntsim} rows) in {runtime:.1f} s")
    return code


def cmd_teval(args) -> int:
    sc, _ = _resolve(args)
    _, teval = sc.build(teval_samples=args.samples)
    print(f"teval {teval:.6e} s")
    if args.period is not None:
        if not args.period > 0:
            raise UsageError("--period must be > 0")
        print(f"Nev {math.floor(args.period / teval)} for a control period of {args.period:g} s")
    return EXIT_OK


def cmd_openloop(args) -> int:
    sc, _ = _resolve(args)
    defn = sc.definition
    up = defn.uparam
    if args.p is None:
        p = up.p.copy()
    else:
        try:
            p = np.array([float(t) for t in args.p.split(",")])
        except ValueError:
            raise UsageError(f"--p expects comma-separated numbers, got {args.p!r}") from None
    if p.size != int(up.np):
        raise UsageError(f"--p has {p.size} entries, expected np={up.np}")
    tt, xx, uu = simulate_ol(p, defn.ode, up, defn)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    uu_full = np.vstack([uu, np.zeros((1, uu.shape[1]))])
    with open(out / "openloop.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *[f"x{k + 1}" for k in range(xx.shape[1])], *[f"u{k + 1}" for k in range(uu.shape[1])]])
        for k in range(tt.size):
            writer.writerow([repr(float(v)) for v in (tt[k], *xx[k], *uu_full[k])])
    print(f"wrote {out / 'openloop.csv'} ({tt.size} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dfmpc", description="Derivative-free parametrized NMPC")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(p, config=True):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--example", help=f"one of {', '.join(sorted(SCENARIOS))}")
        if config:
            group.add_argument("--config", help="JSON scenario file")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="dot-path into the records, e.g. ocp.rd=2 or plant.w=[0,0,0]")

    run = sub.add_parser("run", help="closed-loop simulation")
    scenario_args(run)
    run.add_argument("--tsim", type=float)
    run.add_argument("--nev", type=int)
    run.add_argument("--rk-order", type=int, choices=(1, 2, 4), help="engine-side integrator order")
    run.add_argument("--subset", help="1-based decision components to optimize, e.g. 1,2")
    run.add_argument("--seed", type=int, help="ignored (deterministic)")
    run.add_argument("--trace", action="store_true", help="write the solver trace of the last step")
    run.add_argument("--out", required=True)
    run.set_defaults(func=cmd_run)

    tev = sub.add_parser("teval", help="time one cost/constraint evaluation")
    scenario_args(tev)
    tev.add_argument("--period", type=float, help="control period; prints the matching Nev")
    tev.add_argument("--samples", type=int, default=100)
    tev.set_defaults(func=cmd_teval)

    ol = sub.add_parser("openloop", help="open-loop simulation over one horizon")
    scenario_args(ol)
    ol.add_argument("--p", help="comma-separated decision vector (default: the record's p)")
    ol.add_argument("--out", required=True)
    ol.set_defaults(func=cmd_openloop)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dfmpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DimensionChangeError, ProblemValidationError, ValueError, ArithmeticError) as exc:
        print(f"dfmpc: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
