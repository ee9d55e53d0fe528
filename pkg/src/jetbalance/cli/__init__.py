"""Command-line front end: ``jetbalance <subcommand> MODEL.json``."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import time

from jetbalance import __version__
from jetbalance.domain import set_workers
from jetbalance.expr import ExprError
from jetbalance.cli.model import ModelError, load_model
from jetbalance.cli.ops import FAMILIES, run_check, validate_check
from jetbalance.cli.report import REPORT_SCHEMA, SCHEMA_VERSION, dumps, table

__all__ = ["main", "build_parser", "execute"]

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jetbalance",
                                     description="Residual checks for jet-bundle models of physical systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + FAMILIES:
        p = sub.add_parser(name, help="run every check" if name == "run" else f"run {name} checks")
        p.add_argument("model", help="JSON model file")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--tol", type=float, default=1e-9, help="default tolerance (default 1e-9)")
        p.add_argument("--parallel", action="store_true", help="threaded grid sweeps inside checks")
        p.add_argument("--no-timestamp", action="store_true", help="omit timestamps and timings")
        p.add_argument("--verbose", action="store_true", help="print per-part residuals")
    sub.add_parser("report-schema", help="print the JSON schema of reports")
    return parser


def _base_report(command: str, model_path: str, stamp: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION, "tool": "jetbalance", "version": __version__,
        "command": command, "model": os.path.basename(model_path),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if stamp else None,
        "status": "pass", "exit_code": EXIT_PASS, "errors": [], "checks": [],
        "summary": {"total": 0, "passed": 0, "failed": 0},
    }


def _verdict(residual: float, tol: float, expect: str) -> bool:
    return residual <= tol if expect == "zero" else residual > tol


def execute(command: str, model_path: str, tol: float = 1e-9, stamp: bool = True) -> dict:
    """Validate a model, run the selected checks and return the report dict."""
    report = _base_report(command, model_path, stamp)
    try:
        model = load_model(model_path)
        seen: set = set()
        records = [validate_check(model, c, i, tol, seen) for i, c in enumerate(model.checks)]
    except ModelError as e:
        report.update(status="input_error", exit_code=EXIT_INPUT,
                      errors=[{"location": e.path, "message": e.message}])
        return report
    if command != "run":
        records = [r for r in records if r["spec"].family == command]
        if not records:
            report.update(status="input_error", exit_code=EXIT_INPUT,
                          errors=[{"location": "checks", "message": f"no {command} checks in model"}])
            return report
    for rec in records:
        t0 = time.perf_counter()
        entry = {"name": rec["name"], "op": rec["op"], "domain": rec["domain_name"], "tol": rec["tol"],
                 "expect": rec["expect"], "error": None, "details": {}, "residuals": {}, "argmax": {},
                 "worst": None, "max_residual": None}
        try:
            out = run_check(model, rec)
            entry.update(residuals=out.parts, argmax=out.argmax, worst=out.worst, details=out.details,
                         max_residual=out.max_residual)
            ok = _verdict(out.max_residual, rec["tol"], rec["expect"])
            entry["status"] = "PASS" if ok else "FAIL"
        except (ModelError, ExprError, ArithmeticError, ValueError, TypeError) as e:
            entry.update(status="ERROR", error=f"{type(e).__name__}: {e}")
        entry["wall_time"] = round(time.perf_counter() - t0, 6) if stamp else None
        report["checks"].append(entry)
    passed = sum(c["status"] == "PASS" for c in report["checks"])
    total = len(report["checks"])
    report["summary"] = {"total": total, "passed": passed, "failed": total - passed}
    if passed < total:
        report.update(status="fail", exit_code=EXIT_FAIL)
    return report


def _print_verbose(report: dict, stream) -> None:
    for c in report["checks"]:
        stream.write(f"[{c['name']}] op={c['op']}\n")
        for part, r in c["residuals"].items():
            stream.write(f"    {part}: {r:.6e}\n")
        if c["argmax"]:
            where = ", ".join(f"{k}={v:.6g}" for k, v in c["argmax"].items())
            stream.write(f"    worst at {where}\n")
        if c["error"]:
            stream.write(f"    error: {c['error']}\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report-schema":
        sys.stdout.write(json.dumps(REPORT_SCHEMA, indent=2) + "\n")
        return EXIT_PASS
    if args.parallel:
        set_workers(os.cpu_count() or 1)
    try:
        report = execute(args.command, args.model, args.tol, stamp=not args.no_timestamp)
    finally:
        set_workers(1)
    if report["errors"]:
        for err in report["errors"]:
            sys.stderr.write(f"input error: {err['location']}: {err['message']}\n")
    else:
        if args.command == "euler-lagrange":
            for c in report["checks"]:
                for eq in c["details"].get("equations", []):
                    sys.stdout.write(f"{c['name']}: {eq}\n")
        sys.stdout.write(table(report["checks"]))
        if args.verbose:
            _print_verbose(report, sys.stdout)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    return report["exit_code"]

