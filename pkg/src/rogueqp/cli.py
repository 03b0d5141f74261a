"""Command-line entry point: ``rogueqp <subcommand> [--config PATH] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from . import io
from .errors import AccuracyError, ConfigError, DivergenceError, DomainError, StructuralError
from .experiments import RUNNERS

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_DOMAIN = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rogueqp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", type=Path, help="output directory (default: output.dir)")
        sp.add_argument("--seed", type=int, help="root seed, overrides sampling.root_seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        if name == "tree-check":
            sp.add_argument("--k", type=int, default=3, help="branch depth")
    return ap


def _resolve(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.default_for(args.command)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("sampling.root_seed", "must be an unsigned 64-bit integer")
        cfg = replace(cfg, sampling=replace(cfg.sampling, root_seed=args.seed))
    if args.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        out = Path(args.out) if args.out else Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        kw = {"threads": args.threads}
        if args.command == "tree-check":
            kw["k"] = args.k
        summary, arts = RUNNERS[args.command](cfg, out, **kw)
        io.write_manifest(out, args.command, cfg.to_dict(), cfg.sampling.root_seed, args.threads, arts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, AccuracyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (DomainError, StructuralError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    brief = {k: v for k, v in io.jsonable(summary).items() if not isinstance(v, (list, dict))}
    if args.command == "tree-check":
        brief = io.jsonable(summary)
    print(json.dumps(brief, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
