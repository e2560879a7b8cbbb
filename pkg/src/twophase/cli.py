"""Command-line entry point.

Exit codes: 0 every verdict passed, 1 a check failed or errored,
2 the configuration was rejected.
"""

from __future__ import annotations

import argparse
import json
import sys

from .checks import list_checks
from .harness import (AXES, CheckFailure, convergence_study, report_json, run_scenario, write_convergence,
                      write_report)
from .scenarios import SCHEMA, ConfigError, builtin_names

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twophase", description="Verification checks for two-phase flow identities.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the checks of a scenario config")
    run.add_argument("config", help="path to a JSON config or the name of a built-in scenario")
    run.add_argument("--strict", action="store_true", help="stop at the first failing check")
    run.add_argument("--out", default=None, help="directory for report.json and tables/")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--check", action="append", dest="checks", help="run only this check id (repeatable)")
    run.add_argument("--set", action="append", dest="overrides", metavar="KEY=VALUE",
                     help="override a config entry, e.g. material.sigma=0.6")

    conv = sub.add_parser("converge", help="convergence study along one resolution axis")
    conv.add_argument("config")
    conv.add_argument("--axis", choices=AXES, required=True)
    conv.add_argument("--levels", required=True, help="comma-separated resolution levels (at least three)")
    conv.add_argument("--out", default=None)
    conv.add_argument("--seed", type=int, default=None)
    conv.add_argument("--set", action="append", dest="overrides", metavar="KEY=VALUE")

    sub.add_parser("list-checks", help="print the check catalog")
    sub.add_parser("list-scenarios", help="print the built-in scenario names")
    sub.add_parser("schema", help="print the config JSON schema")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list-checks":
            for c in list_checks():
                print(f"{c['id']}\t{c['operation']}\t{c['anchor']}")
            return EXIT_OK
        if args.command == "list-scenarios":
            print("\n".join(builtin_names()))
            return EXIT_OK
        if args.command == "schema":
            print(json.dumps(SCHEMA, indent=2, ensure_ascii=False))
            return EXIT_OK
        overrides = _overrides(args.overrides)
        if args.command == "run":
            try:
                report = run_scenario(args.config, args.seed, args.strict, args.workers, overrides, args.checks)
            except CheckFailure as exc:
                print(f"FAILED {exc.check_id}: {exc}", file=sys.stderr)
                return EXIT_FAIL
            if args.out:
                path = write_report(report, args.out)
                print(f"report written to {path}")
            else:
                sys.stdout.write(report_json(report))
            for rec in report["checks"]:
                print(f"{rec['status']:>7}  {rec['id']}", file=sys.stderr)
            return EXIT_OK if report["ok"] else EXIT_FAIL
        if args.command == "converge":
            levels = [float(x) for x in args.levels.split(",") if x.strip()]
            study = convergence_study(args.config, args.axis, levels, args.seed, overrides)
            for row in study["rows"]:
                print(f"{row['level']:.6g}\t{row['error']:.6e}")
            print(f"observed order {study['observed_order']:.3f} ({'monotone' if study['monotone'] else 'NOT monotone'})")
            if args.out:
                print(f"table written to {write_convergence(study, args.out)}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
