"""``probe`` command line.

Exit status: 0 success, 1 invalid configuration, 2 numerical fault,
3 file-system error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from .presets import get_preset, list_presets

THREAD_ENV = "PROBE_THREADS"
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS")

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _apply_thread_limit():
    n = os.environ.get(THREAD_ENV)
    if not n:
        return
    if not n.isdigit() or int(n) < 1:
        raise SystemExit(f"{THREAD_ENV} must be a positive integer, got {n!r}")
    for var in _THREAD_VARS:
        os.environ[var] = n


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="probe", description="Cavity probe of a bosonic Josephson "
                                 "junction: run, validate and list experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config or preset")
    run.add_argument("config", nargs="?", help="JSON config file")
    run.add_argument("--preset", help="preset name (see 'probe presets')")
    run.add_argument("--out", help="output directory (default: the config's output.dir)")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", nargs="?")
    val.add_argument("--preset")
    pre = sub.add_parser("presets", help="list presets")
    pre.add_argument("--json", action="store_true", help="full catalog as JSON")
    sub.add_parser("schema", help="print the config JSON schema")
    return ap


def _load(args) -> dict:
    if bool(args.config) == bool(args.preset):
        raise cfgmod.ConfigError(["give exactly one of a config file or --preset"])
    if args.preset:
        try:
            return get_preset(args.preset)
        except KeyError as exc:
            raise cfgmod.ConfigError([str(exc.args[0])]) from None
    try:
        return cfgmod.load(args.config)
    except json.JSONDecodeError as exc:
        raise cfgmod.ConfigError([f"{args.config}: invalid JSON ({exc})"]) from None


def _print_errors(errors):
    for e in errors:
        print(f"config error: {e}", file=sys.stderr)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "presets":
        cat = list_presets()
        if args.json:
            print(cfgmod.dumps(cat), end="")
        else:
            width = max(len(c["name"]) for c in cat)
            for c in cat:
                print(f"{c['name']:<{width}}  {c['kind']:<12} {c['description']}")
        return EXIT_OK
    if args.command == "schema":
        print(cfgmod.dumps(cfgmod.SCHEMA), end="")
        return EXIT_OK

    _apply_thread_limit()
    try:
        config = _load(args)
    except cfgmod.ConfigError as exc:
        _print_errors(exc.errors)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    from . import runner  # numpy and friends load after the thread limit is set

    if args.command == "validate":
        report = runner.validate(config)
        print(runner.to_json(report), end="")
        for w in report["warnings"]:
            print(f"warning: {w}", file=sys.stderr)
        return EXIT_OK if report["ok"] else EXIT_SCHEMA

    out = args.out or config.get("output", {}).get("dir")
    if out is None:
        print("error: no output directory; pass --out or set output.dir", file=sys.stderr)
        return EXIT_IO
    try:
        bundle = runner.run(config, out)
    except cfgmod.ConfigError as exc:
        _print_errors(exc.errors)
        return EXIT_SCHEMA
    except runner.PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    names = sorted([runner.CONFIG_FILE, runner.RUNTIME_FILE, *bundle.payloads])
    print(f"wrote {len(names)} files to {out}: {', '.join(names)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
