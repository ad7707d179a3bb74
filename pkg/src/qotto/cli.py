"""Command-line front end: ``qotto {simulate,limit-cycle,sweep,optimize,validate}``.

Exit codes: 0 success, 1 physics or runtime failure, 2 bad configuration
or usage, 3 limit cycle not converged, 4 an efficiency bound was violated.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import plotting, serialize
from .bloch import BVector
from .config import FIXTURES, RunConfig, fixture_path, load_config
from .cycle import (
    PROBE_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    equilibrium_corners,
    find_limit_cycle,
    optimize_time_allocation,
    run_cycle,
    summary_row,
    sweep,
    sweep_spread,
    with_parameter,
)
from .errors import ConfigError, NoConvergence, OttoError

EXIT_FAIL, EXIT_CONFIG, EXIT_NOCONV, EXIT_BOUND = 1, 2, 3, 4


def _out_path(args, cfg: RunConfig | None, default):
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_path:
        return Path(cfg.output_path)
    return Path(default)


def _fmt(args, cfg):
    if args.format:
        return args.format
    if args.out and Path(args.out).suffix in (".csv", ".json"):
        return Path(args.out).suffix[1:]
    return cfg.output_format if cfg else "csv"


def _figures(args, cfg):
    return not args.no_figures and (cfg.figures if cfg else True)


def _sidecar(path: Path, suffix):
    return path.with_name(path.stem + suffix)


def _shift(sample, dt, dw, dq):
    return dataclasses.replace(
        sample, time=sample.time + dt, cumulative_work=sample.cumulative_work + dw,
        cumulative_heat=sample.cumulative_heat + dq,
    )


def cmd_simulate(args, cfg: RunConfig):
    spec = cfg.spec
    start = cfg.simulate.get("start", "limit-cycle")
    periods = int(cfg.simulate.get("periods", 1))
    if start == "limit-cycle":
        res = find_limit_cycle(spec)
        b0 = res.corners["A"]
    elif start == "hot-equilibrium":
        b0 = equilibrium_corners(spec)[0]
    elif start == "cold-equilibrium":
        b0 = equilibrium_corners(spec)[1]
    else:
        b0 = BVector(*start)
    samples = []
    t0 = w0 = q0 = 0.0
    b = b0
    for _ in range(periods):
        part, branches, b = run_cycle(spec, b)
        samples += [_shift(s, t0, w0, q0) for s in part]
        t0 += spec.period
        w0 += sum(br.work for br in branches)
        q0 += sum(br.heat for br in branches)
    out = _out_path(args, cfg, f"trajectory.{_fmt(args, cfg)}")
    serialize.write_trajectory(out, samples, _fmt(args, cfg))
    print(f"wrote {len(samples)} samples to {out}")
    if _figures(args, cfg) and samples:
        for p in plotting.trajectory_figures(samples, spec, out):
            print(f"wrote {p}")
    return 0


def cmd_limit_cycle(args, cfg: RunConfig):
    spec = cfg.spec
    res = find_limit_cycle(spec, trajectory=_figures(args, cfg))
    summary = res.summary()
    row = summary_row(res)
    out = _out_path(args, cfg, f"limit_cycle.{_fmt(args, cfg)}")
    if _fmt(args, cfg) == "json":
        serialize.write_json(out, summary)
    else:
        serialize.write_table(out, SUMMARY_COLUMNS, [[row[c] for c in SUMMARY_COLUMNS]])
        corners = [[k, *dataclasses.astuple(v)] for k, v in res.corners.items()]
        serialize.write_table(_sidecar(out, "_corners.csv"), ("corner", "b1", "b2", "b3", "b4", "b5"), corners)
    print(f"wrote {out}")
    for key in ("W_out", "Q_h", "Q_c", "efficiency", "power", "DS_cycle", "residual"):
        print(f"  {key:<11s} {summary[key]: .10g}")
    if _figures(args, cfg):
        for p in plotting.trajectory_figures(res.trajectory, spec, out):
            print(f"wrote {p}")
    if not summary["engine"]:
        print("  non-engine: the cycle does not deliver work from the hot bath")
        return 0
    bound = summary["carnot_otto_bound"]
    print(f"  efficiency bound 1 - Omega_a/Omega_b = {bound:.10g}")
    if summary["efficiency"] > bound + 1e-12:
        print("  efficiency bound VIOLATED", file=sys.stderr)
        return EXIT_BOUND
    return 0


def _variant_spec(spec, overrides):
    for name, value in (overrides or {}).items():
        spec = with_parameter(spec, name, value)
    return spec


def cmd_sweep(args, cfg: RunConfig):
    if cfg.sweep is None:
        raise ConfigError("config has no 'sweep' section")
    grid = cfg.sweep_grid()
    param = cfg.sweep["parameter"]
    fixed = cfg.sweep.get("fixed_cycle_time")
    variants = cfg.sweep.get("variants") or [{"label": "base"}]
    tables, flat = {}, []
    for v in variants:
        rows = sweep(_variant_spec(cfg.spec, v.get("overrides")), param, grid, fixed, threads=args.threads)
        tables[v["label"]] = rows
        flat += [[v["label"], *(r[c] for c in SWEEP_COLUMNS)] for r in rows]
    out = _out_path(args, cfg, f"sweep.{_fmt(args, cfg)}")
    serialize.write_table(out, ("variant",) + SWEEP_COLUMNS, flat, _fmt(args, cfg))
    summary = {"parameter": param, "points": len(grid), "variants": {}}
    for label, rows in tables.items():
        ok = [r for r in rows if r["ok"]]
        summary["variants"][label] = {
            "succeeded": len(ok),
            "failed": len(rows) - len(ok),
            "power_spread": sweep_spread(rows, "power"),
            "DS_cycle_spread": sweep_spread(rows, "DS_cycle"),
            "min_power": min((r["power"] for r in ok), default=float("nan")),
            "max_power": max((r["power"] for r in ok), default=float("nan")),
            "negative_power_points": sum(1 for r in ok if r["power"] < 0),
        }
    serialize.write_json(_sidecar(out, "_summary.json"), summary)
    print(f"wrote {out}")
    for label, s in summary["variants"].items():
        print(f"  {label:<16s} power spread {s['power_spread']:.6g}  negative points {s['negative_power_points']}")
    if _figures(args, cfg) and len(grid):
        print(f"wrote {plotting.plot_sweep(tables, param, _sidecar(out, '_sweep.png'))}")
    if len(grid) and not any(r["ok"] for rows in tables.values() for r in rows):
        return EXIT_FAIL
    return 0


def cmd_optimize(args, cfg: RunConfig):
    o = cfg.optimize
    spec = cfg.spec
    budget = float(o.get("total_budget", spec.period))
    best = optimize_time_allocation(
        spec, budget, min_adiabat=float(o.get("min_adiabat", 0.01)),
        max_rounds=int(o.get("max_rounds", 100)), xtol=float(o.get("xtol", 1e-6)),
    )
    out = _out_path(args, cfg, f"optimize.{_fmt(args, cfg)}")
    serialize.write_table(out, PROBE_COLUMNS, best.probes, _fmt(args, cfg))
    summary = best.as_dict()
    summary["total_budget"] = budget
    summary["start_power"] = best.probes[0][-1]
    serialize.write_json(_sidecar(out, "_best.json"), summary)
    print(f"wrote {out}")
    print(f"  power {best.power:.10g} at tau_h={best.tau_h:.6g} tau_ba={best.tau_ba:.6g} "
          f"tau_c={best.tau_c:.6g} tau_ab={best.tau_ab:.6g}")
    return 0


def cmd_validate(args, cfg: RunConfig | None):
    from .validate import run_battery

    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    cases = cfg.validate.get("cases") if cfg else None
    checks = run_battery(seed=seed, cases=cases)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    if args.out:
        serialize.write_json(args.out, {"seed": seed, "passed": ok, "checks": [dataclasses.asdict(c) for c in checks]})
    return 0 if ok else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate,
    "limit-cycle": cmd_limit_cycle,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="qotto", description="Finite-time quantum Otto engine simulator.")
    p.add_argument("command", choices=sorted(COMMANDS))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="YAML run configuration")
    src.add_argument("--fixture", choices=FIXTURES, help="use a shipped configuration")
    p.add_argument("--out", help="output file (figures and sidecars are written next to it)")
    p.add_argument("--format", choices=("csv", "json"), help="defaults to the --out suffix, then the config")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        path = args.config or (fixture_path(args.fixture) if args.fixture else None)
        cfg = load_config(path) if path else None
        if cfg is None and args.command != "validate":
            raise ConfigError(f"'{args.command}' needs --config or --fixture")
        if cfg is not None and args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (OttoError, ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
