"""Command-line entry point.

    kmm {solve,frontier,fixed-point,compare,sweep,verify} [--config PATH]
        [--seed N] [--gh-nodes N] [--out DIR]

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, load_config
from .errors import NumericalError, ValidationError
from .experiments import RUNNERS, run_verify

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3

log = logging.getLogger("kmm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmm", description="Smooth-ambiguity portfolio experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="JSON config; defaults to the base parameter set")
    parser.add_argument("--seed", type=int, help="override numerics.seed")
    parser.add_argument("--gh-nodes", type=int, help="override numerics.gh_nodes")
    parser.add_argument("--out", help="override output.directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.gh_nodes, args.out)
        if cfg.experiment is not None and cfg.experiment != args.experiment:
            raise ValidationError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.experiment == "verify":
            files, checks = run_verify(cfg)
            for c in checks:
                status = "PASS" if c.passed else "FAIL"
                detail = c.error if c.error else f"{c.value:.3e} (limit {c.threshold:g})"
                print(f"{status} {c.name}: {detail}")
            code = EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY
        else:
            files = RUNNERS[args.experiment](cfg)
            code = EXIT_OK
    except ValidationError as exc:
        print(f"validation error ({args.experiment}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure ({args.experiment}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for f in files:
        print(f)
    return code


if __name__ == "__main__":
    sys.exit(main())
