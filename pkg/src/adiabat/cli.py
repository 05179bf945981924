"""Command-line front door.

    adiabat run <config> [--out DIR]
    adiabat suite <dir-or-configs...> [--jobs N] [--out DIR]
    adiabat validate <config>

Exit codes: 0 success, 2 config error, 3 numerical failure.  The env var
ADIABAT_OUT sets the default output root (fallback ./out).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import AdiabatError, ConfigError
from .runner import run_scenario_file, run_suite
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _out_root(value):
    if value:
        return Path(value)
    return Path(os.environ.get("ADIABAT_OUT", "out"))


def _collect_configs(targets):
    paths = []
    for t in targets:
        p = Path(t)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.ini")))
        else:
            paths.append(p)
    if not paths:
        raise ConfigError("missing-key", "no scenario configs found")
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="adiabat",
        description="Adiabatic vs zero-polytropic process simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output root directory")

    p_suite = sub.add_parser("suite", help="run a directory (or list) of configs")
    p_suite.add_argument("targets", nargs="+")
    p_suite.add_argument("--jobs", type=int, default=1)
    p_suite.add_argument("--out", default=None, help="output root directory")

    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")

    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            text = Path(args.config).read_text(encoding="utf-8")
            scenario = parse_scenario(text, fallback_name=Path(args.config).stem)
            print(f"ok: scenario {scenario.name!r} ({scenario.experiment})")
            return EXIT_OK

        if args.command == "run":
            manifest = run_scenario_file(args.config, _out_root(args.out))
            print(f"wrote {manifest.out_dir} ({len(manifest.files)} files)")
            return EXIT_OK

        if args.command == "suite":
            paths = _collect_configs(args.targets)
            results, any_failed = run_suite(paths, _out_root(args.out),
                                            jobs=max(1, args.jobs))
            for r in results:
                mark = "ok " if r["status"] == "ok" else "ERR"
                extra = r.get("error", r.get("out_dir", ""))
                print(f"[{mark}] {r['name']}: {extra}")
            return EXIT_NUMERICAL if any_failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdiabatError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
