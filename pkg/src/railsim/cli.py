"""Command-line front end.

Subcommands:
  run      simulate a scenario; write the trace CSV and voltage/current figures
  cases    list the built-in validation cases
  compare  error metrics between a trace CSV and a measured recording
  sweep    run a scenario across several values of one parameter, in parallel

Exit codes: 0 success, 1 usage, 2 input error, 3 numerical failure.
RAIL_SIM_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import is_dataclass, replace

from .compare import ComparisonError, ComparisonReport, compare_traces
from .loadflow import LoadFlowError
from .network import NetworkError
from .scenario import Scenario, ScenarioError, builtin_case, case_summaries, load_scenario_file
from .simulator import SimulationError, run
from .traceio import TraceFormatError, read_measured, read_trace, write_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.case is not None:
        return builtin_case(args.case)
    return load_scenario_file(args.scenario)


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _scenario_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    trace = run(scenario)
    stem = scenario.name
    csv_path = os.path.join(args.out, f"{stem}_trace.csv")
    write_trace(trace, csv_path)

    measured = None
    measured_path = args.measured or scenario.measured_csv
    if measured_path:
        measured = read_measured(measured_path)

    from .plots import render_trace_plots

    paths = render_trace_plots(
        trace, args.out, stem, i_max=scenario.gains.i_max, measured=measured
    )
    for p in [csv_path, *paths]:
        print(p)
    return EXIT_OK


def _cmd_cases(args: argparse.Namespace) -> int:
    print(f"{'case':>4}  {'fault [ms]':>10}  {'z_fault [p.u.]':>16}  "
          f"{'at [km]':>7}  {'load [MW]':>9}  {'limiting':>8}")
    for row in case_summaries():
        z = row["z_fault_pu"]
        print(
            f"{row['case']:>4}  {row['fault_duration_ms']:>10.0f}  "
            f"{z.real:>7.2f}{z.imag:>+7.2f}j  {row['fault_pos_km']:>7.0f}  "
            f"{row['p_load_mw']:>9.2f}  {'yes' if row['limiting_expected'] else 'no':>8}"
        )
    return EXIT_OK


def _print_report(report: ComparisonReport) -> None:
    names = ["overall", *report.windows.keys()]
    print(f"{'metric':<12}" + "".join(f"{n:>14}" for n in names))
    rows = {
        "rmse_u": [report.rmse_u] + [w.rmse_u for w in report.windows.values()],
        "rmse_i": [report.rmse_i] + [w.rmse_i for w in report.windows.values()],
        "max_err_u": [report.max_err_u] + [w.max_err_u for w in report.windows.values()],
        "max_err_i": [report.max_err_i] + [w.max_err_i for w in report.windows.values()],
        "n_samples": [report.n_samples] + [w.n_samples for w in report.windows.values()],
    }
    for metric, values in rows.items():
        cells = "".join(
            f"{v:>14d}" if isinstance(v, int) else f"{v:>14.6g}" for v in values
        )
        print(f"{metric:<12}{cells}")
    print(f"{'offset_s':<12}{report.offset:>14.6g}")


def _cmd_compare(args: argparse.Namespace) -> int:
    sim = read_trace(args.trace)
    measured = read_measured(args.measured)
    fault_window = tuple(args.fault_window) if args.fault_window else None
    report = compare_traces(
        sim, measured, max_offset=args.max_offset, fault_window=fault_window
    )
    _print_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_kv())
        print(f"report written to {args.out}")
    else:
        print()
        print(report.to_kv(), end="")
    return EXIT_OK


def _set_param(scenario: Scenario, path: str, value: float) -> Scenario:
    parts = path.split(".")
    def descend(obj, idx: int):
        name = parts[idx]
        if not hasattr(obj, name):
            raise ScenarioError(f"no parameter {'.'.join(parts[: idx + 1])!r}")
        if idx == len(parts) - 1:
            return replace(obj, **{name: value})
        child = getattr(obj, name)
        if not is_dataclass(child):
            raise ScenarioError(f"{'.'.join(parts[: idx + 1])!r} is not a parameter group")
        return replace(obj, **{name: descend(child, idx + 1)})
    return descend(scenario, 0)


def _sweep_job(job: tuple[float, Scenario, str]) -> tuple[float, str, float, float, bool]:
    value, scenario, out_path = job
    trace = run(scenario)
    write_trace(trace, out_path)
    return (
        value,
        out_path,
        float(trace.i_mag.max()),
        float(trace.u_mag.min()),
        bool(trace.limiting.any()),
    )


def _cmd_sweep(args: argparse.Namespace) -> int:
    base = _scenario_from_args(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError(f"--values must be comma-separated numbers, got {args.values!r}")
    if not values:
        raise ScenarioError("--values is empty")
    os.makedirs(args.out, exist_ok=True)

    jobs = []
    for idx, value in enumerate(values):
        scn = _set_param(base, args.param, value)
        out_path = os.path.join(args.out, f"{base.name}_sweep_{idx:02d}_trace.csv")
        jobs.append((value, scn, out_path))

    workers = min(len(jobs), os.cpu_count() or 1)
    env_cap = os.environ.get("RAIL_SIM_THREADS")
    if env_cap:
        try:
            workers = max(1, min(workers, int(env_cap)))
        except ValueError:
            raise ScenarioError(f"RAIL_SIM_THREADS must be an integer, got {env_cap!r}")

    if workers == 1:
        results = [_sweep_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))

    summary_path = os.path.join(args.out, f"{base.name}_sweep_summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(f"{args.param},trace_file,max_i_pu,min_u_pu,limiting\n")
        for value, path, max_i, min_u, limiting in results:
            fh.write(f"{value!r},{os.path.basename(path)},{max_i!r},{min_u!r},{int(limiting)}\n")
    print(summary_path)
    for _, path, *_ in results:
        print(path)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="railsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_scenario_source(p: _Parser) -> None:
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--case", type=int, help="built-in case number (1-4)")
        group.add_argument("--scenario", help="scenario YAML file")

    p_run = sub.add_parser("run", help="simulate and write trace + figures")
    add_scenario_source(p_run)
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.add_argument("--measured", help="measured CSV to overlay on the figures")
    p_run.set_defaults(fn=_cmd_run)

    p_cases = sub.add_parser("cases", help="list built-in cases")
    p_cases.set_defaults(fn=_cmd_cases)

    p_cmp = sub.add_parser("compare", help="compare a trace against a measured recording")
    p_cmp.add_argument("--trace", required=True, help="simulated trace CSV")
    p_cmp.add_argument("--measured", required=True, help="measured CSV (time_s,u_pu,i_pu)")
    p_cmp.add_argument("--max-offset", type=float, default=0.0,
                       help="search range [s] for the recording time offset")
    p_cmp.add_argument("--fault-window", type=float, nargs=2, metavar=("ON", "OFF"),
                       help="fault interval [s] for per-window metrics")
    p_cmp.add_argument("--out", help="write the machine-readable report here")
    p_cmp.set_defaults(fn=_cmd_compare)

    p_sweep = sub.add_parser("sweep", help="run one scenario across parameter values")
    add_scenario_source(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         help="dotted parameter path, e.g. gains.i_max or p_load_mw")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", default=".", help="output directory")
    p_sweep.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, TraceFormatError, ComparisonError, NetworkError) as exc:
        print(f"railsim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"railsim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SimulationError, LoadFlowError) as exc:
        print(f"railsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
