"""Command-line entry point: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import CtxDepError
from .pipeline import PIPELINE, STAGES, run_pipeline, run_stage

log = logging.getLogger("ctxdep")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ctxdep",
        description="Weakly supervised detection of context-dependent messages.",
    )
    p.add_argument("stage", choices=[*STAGES, "all"], help="pipeline stage to run ('all' runs every stage in order)")
    p.add_argument("--config", help="JSON pipeline configuration")
    p.add_argument("--workspace", default="workspace", help="directory holding stage outputs")
    p.add_argument("--seed", type=int, help="seed for every random component")
    p.add_argument("--format", choices=["jsonl", "tsv"], help="corpus format")
    p.add_argument("--corpus", help="corpus of (context, message, response) records")
    p.add_argument("--validation", help="labeled validation messages (JSONL)")
    p.add_argument("--test", help="labeled test messages (JSONL)")
    p.add_argument("--lowercase", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--stopwords", metavar="PATH", help="stopword list, one token per line")
    p.add_argument("--min-count", type=int, help="vocabulary frequency floor")
    p.add_argument("--min-responses", type=int, help="responses needed for signal estimation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set_seed(args.seed)
        for name in ("format", "corpus", "validation", "test", "lowercase", "stopwords", "min_count", "min_responses"):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg, name, value)
        cfg.validate()
        if args.stage == "all":
            run_pipeline(cfg, args.workspace, PIPELINE)
        else:
            run_stage(args.stage, cfg, args.workspace)
    except CtxDepError as exc:
        print(f"ctxdep {args.stage}: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code != 1 else 2
    except OSError as exc:
        print(f"ctxdep {args.stage}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
