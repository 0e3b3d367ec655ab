"""Command-line entry: tag scenes and export interchange files."""

from __future__ import annotations

import argparse
import sys

from .audio import AdapterError
from .export import (
    default_label_map_path,
    export_detections,
    export_embeddings,
    load_label_map,
)
from .model import DEFAULT_THRESHOLD, PrototypeTagger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def cmd_detect(args) -> int:
    tagger = PrototypeTagger.from_directory(args.prototypes)
    label_map = load_label_map(args.label_map or default_label_map_path())
    summary = export_detections(
        args.audio_dir, args.out, tagger, label_map, args.threshold
    )
    print(
        f"{summary.scenes} scenes, {summary.events} events written to {args.out} "
        f"({summary.unmapped_dropped} unmapped detections dropped)"
    )
    return EXIT_OK


def cmd_embed(args) -> int:
    n = export_embeddings(args.audio_dir, args.out)
    print(f"{n} embeddings written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneadapter",
        description="Export scene detections and embeddings as interchange files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="tag scenes and write a detections file")
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--prototypes", required=True,
                   help="directory with one subdirectory of exemplar WAVs per label")
    p.add_argument("--label-map", default=None,
                   help="CSV mapping model labels onto evaluator labels")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("embed", help="write an embeddings file")
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
