"""Command-line entry point.

    nadyn run <config-file> [--seed N] [--ntraj N] [--out DIR]
                            [--method fssh|qcle|oracle|compare]

Flags override the corresponding config keys. Exit codes: 0 success,
2 configuration error, 3 engine error.
"""

import argparse
import sys

from .config import METHODS, parse_config, with_overrides
from .ensemble import run
from .errors import ConfigError, DynamicsError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nadyn",
        description="Mixed quantum-classical dynamics on two-state models.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a configured ensemble run")
    runp.add_argument("config", help="path to a key = value config file")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    runp.add_argument("--ntraj", type=int, default=None,
                      help="override the trajectory/walker count")
    runp.add_argument("--out", default=None,
                      help="override the output directory")
    runp.add_argument("--method", choices=METHODS, default=None,
                      help="override the configured method")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            text = open(args.config).read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}")
        cfg = parse_config(text)
        cfg = with_overrides(cfg, seed=args.seed, n_traj=args.ntraj,
                             out_dir=args.out, method=args.method)
    except ConfigError as exc:
        print(f"nadyn: config error: {exc}", file=sys.stderr)
        return 2
    try:
        files = run(cfg)
    except DynamicsError as exc:
        print(f"nadyn: engine error: {exc}", file=sys.stderr)
        return 3
    for name in sorted(files):
        print(files[name])
    return 0


if __name__ == "__main__":
    sys.exit(main())
