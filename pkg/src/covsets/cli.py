"""Command-line driver: ``covsets --config exp.toml [--seed N] ...``.

Exit status: 0 success, 2 configuration or usage error, 3 runtime error,
4 resource cap exceeded. The seed is taken from ``--seed``, else from the
``COVSETS_SEED`` environment variable, else from the config file.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import load
from .errors import ConfigError, CovsetsError, ResourceError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_RESOURCE = 0, 2, 3, 4
SEED_ENV = "COVSETS_SEED"

log = logging.getLogger("covsets")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covsets", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, metavar="PATH", help="TOML experiment file")
    p.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
    p.add_argument("--trials", type=_positive, metavar="N")
    p.add_argument("--depth", type=_positive, metavar="K")
    p.add_argument("--jobs", type=int, metavar="N", help="worker processes, 0 = all cores")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    # imported late so `--help` stays fast
    from .experiments import run
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        elif os.environ.get(SEED_ENV):
            try:
                cfg.seed = _u64(os.environ[SEED_ENV])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(SEED_ENV, str(exc)) from exc
        for name in ("trials", "depth", "jobs", "out"):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg, name, value)
        if cfg.jobs < 0:
            raise ConfigError("--jobs", "must be >= 0")
        summary = run(cfg)
    except ConfigError as exc:
        print(f"covsets: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"covsets: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (CovsetsError, ValueError, ArithmeticError) as exc:
        print(f"covsets: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %s/summary.json and %s/trials.csv", cfg.out, cfg.out)
    if not args.quiet:
        print(json.dumps(summary["results"], indent=2, default=str)[:4000])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
