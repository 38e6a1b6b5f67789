"""CLI: run checkpoints over the interchange files."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import AdapterConfig, AdapterConfigError, load_adapter_config
from .generation import generate_declarations
from .interchange import read_jsonl, write_jsonl
from .tagging import predict_tags


def _config(args) -> AdapterConfig:
    if args.config:
        return load_adapter_config(args.config)
    if not args.checkpoint:
        raise AdapterConfigError("either --config or --checkpoint is required")
    return AdapterConfig(checkpoint=args.checkpoint, cache_dir=args.cache_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lpaf-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("predict-tags", "problems.jsonl -> predictions.jsonl"),
        ("generate", "prompted_inputs.jsonl -> declarations.jsonl"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--config", help="flat key = value adapter config")
        p.add_argument("--checkpoint", help="checkpoint id or directory (if no --config)")
        p.add_argument("--cache-dir", default=None)

    args = parser.parse_args(argv)
    logging.basicConfig(level=os.environ.get("LPAF_LOG", "WARNING").upper())
    try:
        config = _config(args)
        records = list(read_jsonl(args.input))
        if args.command == "predict-tags":
            write_jsonl(args.out, predict_tags(records, config))
        else:
            write_jsonl(args.out, generate_declarations(records, config))
    except AdapterConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"missing file: {exc.filename or exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
