"""Command line entry point.

    qcat <experiment> --config cfg.json --out results/ [--threads K] [--verbose]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, QcatError
from .harness import EXPERIMENTS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcat",
        description="Quantized torus automorphism experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="path to a strict-JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results identical)")
        p.add_argument("--verbose", action="store_true", help="print progress to stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, threads=args.threads)
        if args.verbose:
            print(f"[qcat] running {args.experiment} with N in {list(cfg.N_values)}",
                  file=sys.stderr)
        csv_path = run_experiment(args.experiment, cfg, args.out)
        if args.verbose:
            print(f"[qcat] wrote {csv_path}", file=sys.stderr)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QcatError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
