"""Command-line interface: ``stiffmod run | list-scenarios | show-scenario | analyze``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import dump_scenario, load_scenario
from .energy import compute_ledger
from .errors import ConfigError, StiffmodError
from .io import emit_csv, emit_plot, read_csv, table, trajectory_from_table
from .scenarios import PRESETS, get_preset, run_scenario


def resolve_scenario(spec: str):
    """Preset name or path to a scenario file."""
    path = Path(spec)
    if path.suffix in (".ini", ".cfg", ".conf") or path.is_file():
        return load_scenario(path)
    return get_preset(spec)


def _write_outputs(scenario, result, out: Path, fmt: str, stride: int | None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    stride = scenario.output_stride if stride is None else stride
    written = []
    if fmt in ("csv", "both"):
        written.append(emit_csv(result.trajectory, result.ledger, out / f"{scenario.name}.csv", stride))
        ini = out / f"{scenario.name}.ini"
        ini.write_text(dump_scenario(result.scenario))
        written.append(ini)
    if fmt in ("svg", "both"):
        cols = table(result.trajectory, result.ledger)
        written.append(emit_plot(cols, out / f"{scenario.name}.svg", title=scenario.name))
    summary = out / f"{scenario.name}.json"
    summary.write_text(json.dumps(result.summary, indent=2) + "\n")
    written.append(summary)
    return written


def _run_one(job):
    spec, t_end, dt, out, fmt, stride, unmodulated = job
    scenario = resolve_scenario(spec)
    if unmodulated:
        scenario = scenario.unmodulated()
    result = run_scenario(scenario, t_end=t_end, dt=dt)
    paths = _write_outputs(result.scenario, result, Path(out), fmt, stride)
    return result.summary, [str(p) for p in paths]


def _report(summary, paths):
    ratio = summary["final_E_over_E0"]
    ratio = "n/a" if ratio is None else f"{ratio:.6g}"
    print(f"{summary['scenario']}: {summary['n_samples']} samples, {summary['n_events']} switches, "
          f"E/E0 = {ratio}, peak |u| = {', '.join(f'{x:.6g}' for x in summary['peak_abs_u'])}")
    for p in paths:
        print(f"  wrote {p}")


def cmd_run(args) -> int:
    jobs = [(s, args.t_end, args.dt, args.out, args.format, args.stride, args.unmodulated)
            for s in args.scenario]
    for spec in args.scenario:
        resolve_scenario(spec)  # fail fast before any work is done
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    for summary, paths in results:
        _report(summary, paths)
    return 0


def cmd_list(args) -> int:
    width = max(len(n) for n in PRESETS)
    for name, s in PRESETS.items():
        print(f"{name:<{width}}  {s.description}")
    return 0


def cmd_show(args) -> int:
    sys.stdout.write(dump_scenario(resolve_scenario(args.name)))
    return 0


def cmd_analyze(args) -> int:
    src = Path(args.input)
    cols = read_csv(src)
    if args.scenario:
        scenario = resolve_scenario(args.scenario)
    elif src.with_suffix(".ini").is_file():
        scenario = load_scenario(src.with_suffix(".ini"))
    else:
        raise ConfigError(f"no scenario for {src}: pass --scenario or keep {src.with_suffix('.ini').name} beside it")
    traj = trajectory_from_table(cols, scenario.excitation)
    if traj.u.shape[1] != scenario.model.n_dof:
        raise ConfigError(f"{src} has {traj.u.shape[1]} nodes but the model has {scenario.model.n_dof}")
    ledger = compute_ledger(traj, scenario.model, scenario.primary_mode)
    E0 = float(ledger.E[0]) if ledger.t.size else 0.0
    report = {
        "source": str(src),
        "scenario": scenario.name,
        "n_samples": int(traj.n_samples),
        "E0": E0,
        "L_final": float(ledger.L[-1]) + 0.0 if ledger.t.size else 0.0,
        "L_a_final": float(ledger.L_a[-1]) + 0.0 if ledger.t.size else 0.0,
        "L_s_final": float(ledger.L_s[-1]) + 0.0 if ledger.t.size else 0.0,
        "L_p_final": float(ledger.L_p[-1]) + 0.0 if ledger.t.size else 0.0,
        "max_closure_error": ledger.max_closure_error(),
    }
    if args.out:
        emit_csv(traj, ledger, args.out)
        report["wrote"] = str(args.out)
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stiffmod", description="Switched-stiffness vibration simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one or more scenarios")
    run.add_argument("--scenario", action="append", required=True,
                     help="preset name or scenario file; repeat to run several")
    run.add_argument("--t-end", type=float, default=None, help="override the end time in s")
    run.add_argument("--dt", type=float, default=None, help="override the step size in s")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--format", choices=("csv", "svg", "both"), default="csv")
    run.add_argument("--stride", type=int, default=None, help="write every n-th sample (switches are always kept)")
    run.add_argument("--unmodulated", action="store_true", help="disable the switching (reference run)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes when several scenarios are given")
    run.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-scenarios", help="list the built-in presets")
    ls.set_defaults(func=cmd_list)

    show = sub.add_parser("show-scenario", help="print a scenario in config-file form")
    show.add_argument("name")
    show.set_defaults(func=cmd_show)

    an = sub.add_parser("analyze", help="recompute the energy ledger of an exported trajectory")
    an.add_argument("--in", dest="input", required=True, help="trajectory CSV written by 'run'")
    an.add_argument("--scenario", default=None, help="scenario of the run (default: sibling .ini file)")
    an.add_argument("--out", default=None, help="write the recomputed table to this CSV")
    an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StiffmodError, ValueError, OSError) as exc:
        print(f"stiffmod: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
