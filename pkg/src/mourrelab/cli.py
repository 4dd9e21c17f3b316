"""Command line entry point.

    mourrelab run CONFIG [--out DIR] [--no-cache] [--jobs N]
    mourrelab validate CONFIG

Exit status: 0 when every check passes, 2 when a threshold check fails,
1 on configuration, I/O or runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .cache import ENV_VAR, EigenCache
from .config import ConfigError, parse_config

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _read_config(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mourrelab", description="Finite-volume Mourre theory experiments on Z^d.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every experiment in a config file")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default: the config's 'output' key, else ./reports)")
    run.add_argument("--no-cache", action="store_true", help=f"do not read or write the eigensystem cache (location: ${ENV_VAR})")
    run.add_argument("--jobs", type=int, default=1, help="experiments to run concurrently")

    val = sub.add_parser("validate", help="parse a config and report every problem")
    val.add_argument("config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        configs = _read_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"{args.config}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.command == "validate":
        for cfg in configs:
            print(f"[{cfg.kind}] {cfg.name}: ok")
        return EXIT_OK

    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.out or configs[0].output or "reports")
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"output directory {out} is not writable: {exc}", file=sys.stderr)
        return EXIT_ERROR

    from .experiments import run_all

    results = run_all(configs, out, EigenCache(enabled=not args.no_cache), jobs=args.jobs)
    print((out / "summary.txt").read_text(encoding="utf-8"), end="")
    if any(r.error for r in results):
        return EXIT_ERROR
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
