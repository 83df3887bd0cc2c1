"""Command-line entry point.

    multisense run CONFIG [--seed N] [--out DIR] [--heatmap-zoom K] [-v]
    multisense --print-default-config

Exit codes: 0 success, 2 configuration error (nothing written), 3 training
diverged, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import default_config_text, load_config
from .errors import ConfigError, IngestionError, TrainingError
from .runner import format_table, run_config

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multisense", description="Multimodal object recognition experiments.")
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default YAML configuration and exit")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run the experiments described by a config file")
    run.add_argument("config", help="path to a YAML config")
    run.add_argument("--seed", type=int, help="override the top-level seed")
    run.add_argument("--out", help="override output_dir")
    run.add_argument("--heatmap-zoom", type=int, help="pixels per confusion-matrix cell in the heatmap")
    run.add_argument("-v", "--verbose", action="store_true", help="log per-model progress")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_default_config:
        sys.stdout.write(default_config_text())
        return EXIT_OK
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed: must be >= 0, got {args.seed}")
            cfg = replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, output_dir=args.out)
        if args.heatmap_zoom is not None:
            if args.heatmap_zoom < 1:
                raise ConfigError(f"--heatmap-zoom: must be >= 1, got {args.heatmap_zoom}")
            cfg = replace(cfg, heatmap_zoom=args.heatmap_zoom)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_config(cfg)
    except TrainingError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (IngestionError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(format_table(rows))
    print(f"artifacts written to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
