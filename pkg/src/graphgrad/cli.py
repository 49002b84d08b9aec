"""Command-line front end.

Subcommands ``run``, ``verify``, ``suite`` and ``export``.  Only written file
paths go to stdout; diagnostics go to stderr.  Exit codes: 0 success,
1 verdict failure, 2 unreadable or schema-invalid input, 3 connectivity or
detailed-balance precondition failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import DetailedBalanceViolation, NotStronglyConnected, ScenarioError, StepDomainViolation
from .scenarios import Scenario, builtin_scenarios, get_scenario
from .verification import netlist_text, run_scenario, trace_columns

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def write_atomic(path: Path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_scenario(source: str) -> Scenario:
    """Scenario from a JSON file, or a built-in scenario by name."""
    path = Path(source)
    if not path.exists():
        try:
            return get_scenario(source)
        except KeyError:
            raise CliError(f"cannot read scenario {source!r}: no such file or built-in scenario", EXIT_INPUT)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read scenario {source!r}: {exc}", EXIT_INPUT) from exc
    if not isinstance(doc, dict):
        raise CliError(f"{source}: scenario must be a JSON object", EXIT_INPUT)
    try:
        return Scenario.from_dict(doc, name=path.stem)
    except ScenarioError as exc:
        raise CliError(f"{source}: {exc}", EXIT_INPUT) from exc


def execute(scenario: Scenario, args, trace: bool) -> tuple[list[Path], dict]:
    """Run one scenario and write its artifacts; returns written paths and the report."""
    try:
        result = run_scenario(scenario, form=args.form, dt=args.dt, horizon=args.horizon)
    except DetailedBalanceViolation as exc:
        pairs = ", ".join(f"({i + 1},{j + 1})" for i, j in exc.pairs)
        raise CliError(f"{scenario.name}: detailed balance violated at pairs {pairs}", EXIT_PRECONDITION) from exc
    except NotStronglyConnected as exc:
        raise CliError(f"{scenario.name}: {exc}", EXIT_PRECONDITION) from exc
    except StepDomainViolation as exc:
        raise CliError(f"{scenario.name}: {exc}", EXIT_VERDICT) from exc

    out = Path(args.out)
    written = []
    if trace:
        csv_text = result.primary.to_csv(trace_columns(result))
        written.append(write_atomic(out / f"{scenario.name}.trace.csv", csv_text))
    fmt = args.emit_netlist or scenario.outputs.get("netlist") or None
    if trace and fmt:
        suffix = "cir" if fmt == "spice" else "netlist.json"
        written.append(write_atomic(out / f"{scenario.name}.{suffix}", netlist_text(result, fmt=fmt)))
    report = result.report
    written.append(write_atomic(out / f"{scenario.name}.report.json", json.dumps(report, indent=2) + "\n"))
    for msg in report["warnings"]:
        print(f"warning: {scenario.name}: {msg}", file=sys.stderr)
    if report["status"] != "pass":
        print(f"{scenario.name}: failed verdicts {', '.join(report['failed'])}", file=sys.stderr)
    return written, report


def _cmd_run(args, trace: bool) -> int:
    scenario = load_scenario(args.scenario)
    paths, report = execute(scenario, args, trace)
    for p in paths:
        print(p)
    return EXIT_OK if report["status"] == "pass" else EXIT_VERDICT


def _suite_worker(name: str, args) -> tuple[list[str], dict | None, str | None]:
    try:
        paths, report = execute(get_scenario(name), args, trace=not args.no_trace)
        return [str(p) for p in paths], report, None
    except CliError as exc:
        return [], None, str(exc)


def _cmd_suite(args) -> int:
    names = [s.name for s in builtin_scenarios(args.filter)]
    if not names:
        raise CliError(f"no scenarios matched {args.filter!r}", EXIT_INPUT)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_suite_worker, names, [args] * len(names)))
    else:
        results = [_suite_worker(n, args) for n in names]
    summary = {"scenarios": [], "status": "pass"}
    for name, (paths, report, error) in zip(names, results):
        for p in paths:
            print(p)
        if error:
            print(error, file=sys.stderr)
            summary["scenarios"].append({"name": name, "status": "error", "failed": [], "error": error})
            summary["status"] = "fail"
            continue
        summary["scenarios"].append({"name": name, "status": report["status"], "failed": report["failed"],
                                     "error": None})
        if report["status"] != "pass":
            summary["status"] = "fail"
    print(write_atomic(Path(args.out) / "suite.json", json.dumps(summary, indent=2) + "\n"))
    return EXIT_OK if summary["status"] == "pass" else EXIT_VERDICT


def _cmd_export(args) -> int:
    scenarios = builtin_scenarios(args.filter)
    if not scenarios:
        raise CliError(f"no scenarios matched {args.filter!r}", EXIT_INPUT)
    for s in scenarios:
        print(write_atomic(Path(args.out) / f"{s.name}.json", json.dumps(s.to_dict(), indent=2) + "\n"))
    return EXIT_OK


def _sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--form", choices=("x", "q", "both"), default=None,
                   help="integrate the node form, the gradient form, or both (default: both)")
    p.add_argument("--dt", type=float, default=None, help="override the RK4 step")
    p.add_argument("--horizon", type=float, default=None, help="override the integration horizon")
    p.add_argument("--emit-netlist", nargs="?", const="json", choices=("json", "spice"), default=None,
                   help="also write the synthesized RC netlist (json or spice)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphgrad",
                                     description="Simulate and verify gradient forms of graph dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write trace, report and optional netlist")
    p.add_argument("scenario", help="scenario JSON file or built-in scenario name")
    _sim_flags(p)

    p = sub.add_parser("verify", help="simulate a scenario and write the verification report only")
    p.add_argument("scenario", help="scenario JSON file or built-in scenario name")
    _sim_flags(p)

    p = sub.add_parser("suite", help="run every built-in scenario")
    p.add_argument("--filter", default=None, help="substring of scenario names or tags")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--no-trace", action="store_true", help="write reports only")
    _sim_flags(p)

    p = sub.add_parser("export", help="write the built-in scenarios as JSON files")
    p.add_argument("--filter", default=None)
    p.add_argument("--out", default="scenarios")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, trace=True)
        if args.command == "verify":
            return _cmd_run(args, trace=False)
        if args.command == "suite":
            return _cmd_suite(args)
        return _cmd_export(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
