"""Command-line interface: seed, gen, detect, eval, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import detect as detect_mod
from . import evaluate as eval_mod
from .corpus import load_corpus
from .errors import (
    AudioFormatError,
    CorpusError,
    PlacementError,
    RelsceneError,
    SchemaError,
)
from .metrics import MsrConfig
from .relations import RelationParams
from .seeds import SeedLibrary, build_seed_corpus
from .synth import dataset_checksum, gen_dataset, load_dataset
from .wavio import read_wav

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


def _corpus(args):
    return load_corpus(args.corpus)


def _library(args) -> SeedLibrary:
    if args.seeds is None:
        raise CorpusError("no seed-audio directory given (--seeds)")
    seeds = Path(args.seeds)
    if not seeds.is_dir():
        raise FileNotFoundError(f"seed-audio directory not found: {seeds}")
    return SeedLibrary.load(seeds)


def cmd_seed(args) -> int:
    out = build_seed_corpus(args.out)
    print(f"seed corpus written to {out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    corpus = _corpus(args)
    library = _library(args)
    out = gen_dataset(corpus, library, args.pairs_per_relation, args.seed, args.out)
    n = args.pairs_per_relation * len(corpus.relations)
    print(f"{n} scenes written to {out}")
    if args.checksum:
        print(f"checksum {dataset_checksum(out)}")
    return EXIT_OK


def _run_detection(args, corpus, manifests, dataset_dir: Path):
    if args.mode == "oracle":
        return {m.scene_id: detect_mod.oracle_detect(m) for m in manifests}
    library = _library(args)
    bank = detect_mod.TemplateBank(library)
    out = {}
    for m in manifests:
        waveform = read_wav(dataset_dir / m.audio_path)
        out[m.scene_id] = detect_mod.template_detect(
            waveform, bank, ncc_threshold=args.ncc_threshold, scene_id=m.scene_id
        )
    return out


def cmd_detect(args) -> int:
    corpus = _corpus(args)
    dataset_dir = Path(args.dataset)
    manifests = load_dataset(dataset_dir)
    detections = _run_detection(args, corpus, manifests, dataset_dir)
    detect_mod.write_events([detections[m.scene_id] for m in manifests], args.out, corpus)
    print(f"{len(manifests)} detection records written to {args.out}")
    return EXIT_OK


def _spatial_waveforms(manifests, dataset_dir: Path):
    out = {}
    for m in manifests:
        if m.sub_relation in ("closefirst", "farfirst", "equaldist"):
            out[m.scene_id] = read_wav(dataset_dir / m.audio_path)
    return out


def cmd_eval(args) -> int:
    corpus = _corpus(args)
    dataset_dir = Path(args.dataset)
    manifests = load_dataset(dataset_dir)
    if args.detections:
        detections = {
            es.scene_id: es for es in detect_mod.read_events(args.detections, corpus)
        }
    else:
        detections = _run_detection(args, corpus, manifests, dataset_dir)

    config = MsrConfig(
        parsimony_weight=args.ws, thresholds=tuple(args.thresholds)
    )
    params = RelationParams(
        sigma1=args.sigma1,
        sigma2=args.sigma2,
        overlap_fraction=args.overlap_fraction,
        order_tolerance=args.order_tolerance,
    )
    waveforms = _spatial_waveforms(manifests, dataset_dir)
    report = eval_mod.evaluate_dataset(
        manifests, detections, corpus, config, params, waveforms
    )

    emb_gen = eval_mod.read_embeddings(args.emb_gen) if args.emb_gen else None
    emb_ref = eval_mod.read_embeddings(args.emb_ref) if args.emb_ref else None
    probs_gen = eval_mod.read_embeddings(args.probs_gen) if args.probs_gen else None
    probs_ref = eval_mod.read_embeddings(args.probs_ref) if args.probs_ref else None
    eval_mod.add_general_metrics(
        report, manifests, emb_gen, emb_ref, probs_gen, probs_ref
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    )
    (out_dir / "report.txt").write_text(eval_mod.render_table(report))
    (out_dir / "relations.tsv").write_text(eval_mod.render_relation_tsv(report))
    print(eval_mod.render_table(report))
    return EXIT_OK


def cmd_report(args) -> int:
    raw = json.loads(Path(args.report).read_text())
    report = eval_mod.EvalReport(
        per_scene=raw["per_scene"],
        per_sub_relation=raw["per_sub_relation"],
        per_main_relation=raw["per_main_relation"],
        overall=raw["overall"],
        thresholds=raw["thresholds"],
        scene_count=raw["scene_count"],
        general=raw.get("general"),
        notes=raw.get("notes"),
    )
    print(eval_mod.render_table(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relscene",
        description="Relation-aware sound scene synthesis and evaluation",
    )
    parser.add_argument("--corpus", default=None, help="corpus config path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seed", help="write the synthetic seed-audio bank")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("gen", help="generate a relation-aware dataset")
    p.add_argument("--seeds", required=True, help="seed-audio directory")
    p.add_argument("--pairs-per-relation", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.add_argument("--checksum", action="store_true")
    p.set_defaults(func=cmd_gen)

    def add_detect_args(p):
        p.add_argument("--mode", choices=["oracle", "template"], default="oracle")
        p.add_argument("--seeds", default=None, help="needed for template mode")
        p.add_argument("--ncc-threshold", type=float,
                       default=detect_mod.DEFAULT_NCC_THRESHOLD)

    p = sub.add_parser("detect", help="run a detector over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    add_detect_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="evaluate detections against a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--detections", default=None, help="detections interchange file")
    add_detect_args(p)
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--thresholds", type=float, nargs="+",
                   default=[0.5, 0.6, 0.7, 0.8])
    p.add_argument("--ws", type=float, default=0.1, help="parsimony weight")
    p.add_argument("--sigma1", type=float, default=0.2)
    p.add_argument("--sigma2", type=float, default=0.4)
    p.add_argument("--overlap-fraction", type=float, default=0.5)
    p.add_argument("--order-tolerance", type=float, default=0.25)
    p.add_argument("--emb-gen", default=None)
    p.add_argument("--emb-ref", default=None)
    p.add_argument("--probs-gen", default=None)
    p.add_argument("--probs-ref", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render a saved report")
    p.add_argument("--report", required=True, help="report.json path")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CorpusError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SchemaError, PlacementError, AudioFormatError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RelsceneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
