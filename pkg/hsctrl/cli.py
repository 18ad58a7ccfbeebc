"""
Command-line entry point.

    hsctrl run --scenario presets/ex1 [--dt X] [--t-final X] [--mode semiglobal|global]
               [--out DIR] [--no-plots]
    hsctrl validate --scenario PATH
    hsctrl list-presets
    hsctrl batch --scenario A --scenario B ... [--out DIR] [--workers N]

Exit codes: 0 completed, 1 configuration error, 2 breach or numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from hsctrl.core.config import settings
from hsctrl.core.exceptions import EXIT_BREACH, EXIT_CONFIG, EXIT_OK, HSControlError, report_error
from hsctrl.core.structured_logging import configure_logging, log_error
from hsctrl.models.constraints import coercivity_check, estimate_alpha_star, invexity_diagnostic
from hsctrl.schemas.enums import ControlMode
from hsctrl.services.export import export_csv, export_summary, export_svg
from hsctrl.services.scenarios import PreparedRun, list_presets, load_scenario, prepare_run
from hsctrl.services.simulator import simulate

logger = structlog.get_logger(__name__)

DEFAULT_SEARCH_HALF_WIDTH = 10.0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsctrl",
        description="Simulate hard/soft time-varying constraint controllers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario and write its outputs")
    run.add_argument("--scenario", required=True, help="scenario file or preset name")
    _add_run_overrides(run)
    run.add_argument("--out", help="output directory (default: $HS_CTRL_OUT_DIR/<scenario name>)")

    validate = sub.add_parser("validate", help="check initial conditions and constraint diagnostics")
    validate.add_argument("--scenario", required=True, help="scenario file or preset name")
    validate.add_argument("--mode", choices=[m.value for m in ControlMode])

    sub.add_parser("list-presets", help="list the bundled scenarios")

    batch = sub.add_parser("batch", help="simulate several scenarios in parallel worker processes")
    batch.add_argument("--scenario", action="append", required=True, help="repeat for each scenario")
    _add_run_overrides(batch)
    batch.add_argument("--out", help="parent output directory (default: $HS_CTRL_OUT_DIR)")
    batch.add_argument("--workers", type=int, help="worker processes (default: $HS_CTRL_BATCH_WORKERS)")
    return parser


def _add_run_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dt", type=float, help="integration step in s")
    parser.add_argument("--t-final", dest="t_final", type=float, help="horizon in s")
    parser.add_argument("--mode", choices=[m.value for m in ControlMode])
    parser.add_argument("--no-plots", dest="no_plots", action="store_true", help="skip SVG output")


def _mode(value: Optional[str]) -> Optional[ControlMode]:
    return ControlMode(value) if value else None


def execute_run(
    scenario_path: str,
    out: Optional[str],
    dt: Optional[float] = None,
    t_final: Optional[float] = None,
    mode: Optional[str] = None,
    plots: bool = True,
) -> Tuple[int, Path]:
    """Run one scenario end to end; returns (exit code, output directory)"""
    scenario = load_scenario(scenario_path)
    prepared = prepare_run(scenario, mode=_mode(mode), dt=dt, t_final=t_final)
    out_dir = Path(out) if out else Path(settings.OUT_DIR) / scenario.name
    result = simulate(prepared.plant, prepared.controller, prepared.sim, prepared.x0, run_id=scenario.name)

    n, r = prepared.plant.n, prepared.plant.r
    export_csv(result, out_dir / "trajectory.csv", n, r)
    export_summary(result, out_dir / "summary.txt")
    if plots:
        export_svg(
            result,
            out_dir,
            prepared.controller,
            box=scenario.plot.box,
            snapshots=scenario.plot.snapshots,
            grid_points=scenario.plot.grid_points,
        )
    return (EXIT_OK if result.status.ok else EXIT_BREACH), out_dir


def cmd_run(args: argparse.Namespace) -> int:
    code, out_dir = execute_run(
        args.scenario, args.out, args.dt, args.t_final, args.mode, plots=not args.no_plots
    )
    summary = (out_dir / "summary.txt").read_text(encoding="utf-8")
    print(f"outputs written to {out_dir}")
    print(summary, end="")
    return code


def _search_box(prepared: PreparedRun) -> List[Tuple[float, float]]:
    section = prepared.scenario.diagnostics
    if section.search_box is not None:
        return [tuple(side) for side in section.search_box]
    if prepared.scenario.plot.box is not None:
        return [tuple(side) for side in prepared.scenario.plot.box]
    x1 = prepared.x0[: prepared.plant.n]
    return [(float(v) - DEFAULT_SEARCH_HALF_WIDTH, float(v) + DEFAULT_SEARCH_HALF_WIDTH) for v in x1]


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    prepared = prepare_run(scenario, mode=_mode(args.mode), strict=False)
    ctrl = prepared.controller
    for check in prepared.validation.checks:
        state = "skip" if check.skipped else ("ok" if check.passed else "FAIL")
        print(f"[{state}] {check.name}: {check.message}")
    if prepared.validation.tuned:
        print(f"tuned rho0={ctrl.nominal.rho0:.6g}")

    box = _search_box(prepared)
    points = scenario.diagnostics.grid_points_per_axis
    x1 = prepared.x0[: prepared.plant.n]
    for label, family in (("hard", ctrl.hard), ("soft", ctrl.soft)):
        star = estimate_alpha_star(family, 0.0, box, points)
        coercive = coercivity_check(family, 0.0, x1)
        print(f"{label}: alpha*(0)~{star:.6g} coercivity={'ok' if coercive.passed else 'FAIL'}")
    invexity = invexity_diagnostic(ctrl.soft, 0.0, box, points)
    for point in invexity.suspicious:
        print(f"soft: critical point with alpha_s={point.alpha:.6g} at {np.round(point.x1, 6).tolist()}")
    print(f"soft: invexity {'ok' if invexity.passed else 'SUSPICIOUS'}")
    return EXIT_OK if prepared.validation.passed else EXIT_CONFIG


def cmd_list_presets(args: argparse.Namespace) -> int:
    for name in list_presets():
        print(name)
    return EXIT_OK


def _batch_worker(job: Tuple[str, str, Optional[float], Optional[float], Optional[str], bool]) -> Tuple[str, int, str]:
    scenario_path, out, dt, t_final, mode, plots = job
    configure_logging()
    try:
        code, out_dir = execute_run(scenario_path, out, dt, t_final, mode, plots)
        return scenario_path, code, str(out_dir)
    except HSControlError as exc:
        return scenario_path, report_error(exc, run_id=scenario_path), exc.message


def cmd_batch(args: argparse.Namespace) -> int:
    parent = Path(args.out or settings.OUT_DIR)
    names = [Path(s).name[: -len(".toml")] if s.endswith(".toml") else Path(s).name for s in args.scenario]
    if len(set(names)) != len(names):
        repeated = ", ".join(sorted({n for n in names if names.count(n) > 1}))
        print(f"error: batch scenarios must have distinct names, repeated: {repeated}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = [
        (path, str(parent / name), args.dt, args.t_final, args.mode, not args.no_plots)
        for path, name in zip(args.scenario, names)
    ]
    workers = args.workers or settings.BATCH_WORKERS
    worst = EXIT_OK
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for path, code, detail in pool.map(_batch_worker, jobs):
            print(f"{path}: exit {code} ({detail})")
            worst = max(worst, code)
    return worst


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "list-presets": cmd_list_presets,
    "batch": cmd_batch,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return COMMANDS[args.command](args)
    except HSControlError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return report_error(exc)
    except OSError as exc:
        log_error(exc, {"command": args.command})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
