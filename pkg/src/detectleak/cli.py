"""``detectleak`` command-line entry point.

Subcommands wire the pipeline end to end: ingest -> sketch -> index ->
scan -> serve -> kappa -> report -> clean -> autodetect-bench -> ppl-eval.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import DataError, DetectLeakError, UsageError

log = logging.getLogger("detectleak")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    parser.add_argument("--data-dir", help="artifact directory "
                        "(default: $DETECTLEAK_DATA_DIR or .)")
    parser.add_argument("--ngram", type=int, dest="ngram_n",
                        help="shingle n-gram size (default 2)")
    parser.add_argument("--char-ngrams", action="store_const", const=True,
                        dest="char_ngrams",
                        help="shingle characters instead of word tokens")
    parser.add_argument("--threshold", type=float,
                        help="Jaccard flagging threshold (default 0.7)")
    parser.add_argument("--num-perm", type=int, dest="num_perm",
                        help="MinHash permutations (default 256)")
    parser.add_argument("--seed", type=int, help="global seed (default 42)")
    parser.add_argument("--shards", type=int, dest="shard_count",
                        help="bucket shard files per band on save")
    parser.add_argument("--jobs", type=int, help="parallel dataset workers")
    parser.add_argument("--lowercase", action="store_const", const=True,
                        help="lowercase during normalization")
    parser.add_argument("--no-collapse-whitespace", action="store_const",
                        const=False, dest="collapse_whitespace",
                        help="keep original whitespace")
    parser.add_argument("--strip-line-comments", action="store_const",
                        const=True, help="strip //... and #... comments")
    parser.add_argument("--strip-block-comments", action="store_const",
                        const=True, help="strip /*...*/ comments")


def _resolve_config(args: argparse.Namespace):
    from .pipeline import RunConfig

    keys = ("ngram_n", "char_ngrams", "threshold", "num_perm", "seed",
            "shard_count", "jobs", "data_dir", "lowercase",
            "collapse_whitespace", "strip_line_comments",
            "strip_block_comments")
    overrides = {k: getattr(args, k, None) for k in keys}
    return RunConfig.resolve(getattr(args, "config", None), overrides)


def _run_dir(args: argparse.Namespace, config) -> Path:
    explicit = getattr(args, "run_dir", None)
    return Path(explicit) if explicit else Path(config.data_dir)


def build_parser() -> _Parser:
    parser = _Parser(prog="detectleak",
                     description="Benchmark contamination detection toolkit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the full automated pipeline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir")
    _add_config_flags(p)

    p = sub.add_parser("ingest", help="ingest manifest datasets")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir")
    _add_config_flags(p)

    p = sub.add_parser("sketch", help="shingle + MinHash ingested datasets")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir")
    _add_config_flags(p)

    p = sub.add_parser("index", help="build the banded LSH index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir")
    _add_config_flags(p)

    p = sub.add_parser("scan", help="scan one benchmark against the index")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--index", required=True, help="index directory")
    p.add_argument("--run-dir")
    p.add_argument("--out", help="flagged-pairs output path")
    _add_config_flags(p)

    p = sub.add_parser("make-fixture",
                       help="generate a synthetic planted-duplicate fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--corpus", type=int, default=1000)
    p.add_argument("--bench", type=int, default=100)
    p.add_argument("--exact", type=int, default=10)
    p.add_argument("--perturbed", type=int, default=10)
    p.add_argument("--doc-tokens", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("assign", help="assign flagged pairs to annotators")
    p.add_argument("--store", required=True)
    p.add_argument("--annotators", required=True,
                   help="comma-separated annotator ids")
    p.add_argument("--per-pair", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="static UI directory to mount at /")

    p = sub.add_parser("kappa", help="inter-annotator agreement")
    p.add_argument("--store", required=True)
    p.add_argument("--binary", action="store_true",
                   help="collapse to duplicate/non-duplicate first")

    p = sub.add_parser("export-labels", help="write the labels export file")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="leakage counts, ratios, repo table")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--markdown", help="optional markdown rendering")

    p = sub.add_parser("clean",
                       help="emit a benchmark copy minus leaked samples")
    p.add_argument("--store", required=True)
    p.add_argument("--benchmark", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest-out",
                   help="removal manifest path (default <out>.removals.jsonl)")

    p = sub.add_parser("autodetect-bench",
                       help="balanced leaked/non-leaked evaluation set")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ppl-eval",
                       help="rank-by-perplexity leak detection accuracy")
    p.add_argument("--scores", required=True)
    p.add_argument("--ks", help="K:STOP:STEP range or comma list "
                   "(default 100:1000:100 clipped)")
    p.add_argument("--out", required=True, help="accuracy curve JSON path")
    p.add_argument("--dist", help="optional histogram JSON path")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--trim-pct", type=float, default=0.02)

    return parser


def _parse_ks(text: str | None, n: int) -> list[int] | None:
    if not text:
        return None
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("--ks range must be START:STOP:STEP")
        start, stop, step = (int(x) for x in parts)
        ks = list(range(start, stop + 1, step))
    else:
        ks = [int(x) for x in text.split(",") if x.strip()]
    ks = [k for k in ks if k <= n]
    if not ks:
        raise UsageError("--ks left no valid k values for this score file")
    return ks


def _cmd_run(args) -> int:
    from .pipeline import run_pipeline

    config = _resolve_config(args)
    summary = run_pipeline(config, args.manifest, _run_dir(args, config))
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_single_stage(args, stage: str) -> int:
    from .corpus import load_manifest
    from .pipeline import RunPaths, stage_index, stage_ingest, stage_sketch

    config = _resolve_config(args)
    manifest_path = Path(args.manifest)
    entries = load_manifest(manifest_path)
    paths = RunPaths(_run_dir(args, config))
    paths.root.mkdir(parents=True, exist_ok=True)
    if stage == "ingest":
        counts = stage_ingest(config, entries, manifest_path.parent, paths)
    elif stage == "sketch":
        counts = stage_sketch(config, entries, paths)
    elif stage == "index":
        counts = stage_index(config, entries, paths)
    else:
        raise UsageError(f"unknown stage {stage}")
    print(json.dumps({stage: counts}, indent=2))
    return 0


def _cmd_scan(args) -> int:
    import numpy as np

    from . import verify as verify_mod
    from .jsonl import atomic_write_json, make_header, write_artifact
    from .lsh import LshIndex
    from .pipeline import RunPaths, _DocLookup, load_docs_artifact
    from .sketch import load_signatures

    config = _resolve_config(args)
    paths = RunPaths(_run_dir(args, config))
    index = LshIndex.load(args.index)
    bench = args.benchmark
    _, rows = load_docs_artifact(paths.docs("benchmark", bench))
    lookup = _DocLookup(config)
    lookup.add_docs(bench, rows)
    corpus_rows: dict[str, np.ndarray] = {}
    for sig_file in sorted((paths.root / "sigs").glob("corpus_*.npz")):
        header, ids, mins = load_signatures(sig_file)
        dataset = header.get("dataset", "")
        _, doc_rows = load_docs_artifact(
            paths.docs("corpus", dataset))
        lookup.add_docs(dataset, doc_rows)
        for row, key in enumerate(ids):
            corpus_rows[key] = mins[row]
    _, bench_ids, bench_mins = load_signatures(paths.sigs("benchmark", bench))
    flagged, stats, quarantined = verify_mod.scan(
        bench, bench_ids, bench_mins, index, shingles=lookup.shingles,
        threshold=config.threshold, texts=lookup.text,
        corpus_mins=corpus_rows.get)
    out = Path(args.out) if args.out else paths.flagged(bench)
    header = make_header("detectleak-flagged-pairs", config=config.stamp(),
                         benchmark=bench, lsh_params=index.params.as_dict())
    write_artifact(out, header, (pair.as_record() for pair in flagged))
    if quarantined:
        write_artifact(paths.quarantine(bench),
                       make_header("detectleak-quarantine",
                                   config=config.stamp()),
                       (pair.as_record() for pair in quarantined))
    atomic_write_json(paths.scan_stats(bench), stats.as_dict())
    print(json.dumps(stats.as_dict(), indent=2))
    return 0


def _cmd_make_fixture(args) -> int:
    from .fixtures import make_planted_fixture

    result = make_planted_fixture(
        args.out, n_corpus=args.corpus, n_bench=args.bench,
        n_exact=args.exact, n_perturbed=args.perturbed,
        doc_tokens=args.doc_tokens, seed=args.seed)
    print(json.dumps({"manifest": result["manifest"],
                      "planted": len(result["truth"]["planted"])}, indent=2))
    return 0


def _cmd_assign(args) -> int:
    from .annotation import AnnotationStore

    store = AnnotationStore(args.store)
    names = [x.strip() for x in args.annotators.split(",") if x.strip()]
    plan = store.assign(names, per_pair=args.per_pair, seed=args.seed)
    loads: dict[str, int] = {}
    for assigned in plan.values():
        for name in assigned:
            loads[name] = loads.get(name, 0) + 1
    print(json.dumps({"pairs": len(plan), "load": loads}, indent=2))
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(args.store, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def _cmd_kappa(args) -> int:
    from .annotation import AnnotationStore

    store = AnnotationStore(args.store)
    print(json.dumps(store.kappa_by_duo(binary=args.binary), indent=2))
    return 0


def _cmd_export_labels(args) -> int:
    from .annotation import AnnotationStore
    from .jsonl import write_jsonl

    store = AnnotationStore(args.store)
    count = write_jsonl(args.out, store.export_labels())
    print(json.dumps({"labels": count, "out": args.out}))
    return 0


def _cmd_report(args) -> int:
    from .annotation import AnnotationStore
    from .jsonl import atomic_write_json
    from .report import build_report, render_markdown

    store = AnnotationStore(args.store)
    config = store.meta.get("config", {})
    run_metadata = {
        "threshold": config.get("threshold"),
        "num_perm": config.get("num_perm"),
        "ngram_n": config.get("ngram_n"),
        "seed": config.get("seed"),
        "comparison_unit": store.meta.get("comparison_unit", "whole_record"),
    }
    report = build_report(store, run_metadata)
    atomic_write_json(args.out, report)
    if args.markdown:
        Path(args.markdown).parent.mkdir(parents=True, exist_ok=True)
        Path(args.markdown).write_text(render_markdown(report),
                                       encoding="utf-8")
    print(json.dumps({"benchmarks": len(report["benchmarks"]),
                      "repositories": len(report["repositories"]),
                      "out": args.out}))
    return 0


def _split_key(key: str) -> str:
    return key.split("::", 1)[1] if "::" in key else key


def _cmd_clean(args) -> int:
    from .annotation import AnnotationStore, BINARY_DUPLICATE, binary_collapse
    from .jsonl import make_header
    from .report import emit_clean

    store = AnnotationStore(args.store)
    info = store.meta.get("benchmarks", {}).get(args.benchmark)
    if info is None:
        raise UsageError(f"benchmark {args.benchmark!r} not in store meta")
    justification: dict[str, list[str]] = {}
    for state, resolution in store.final_pairs():
        if state.dataset != args.benchmark:
            continue
        if binary_collapse(resolution.final_label) == BINARY_DUPLICATE:
            justification.setdefault(
                _split_key(state.bench_id), []).append(state.pair_id)
    manifest_out = args.manifest_out or f"{args.out}.removals.jsonl"
    header = make_header("detectleak-removal-manifest",
                         config=store.meta.get("config"),
                         benchmark=args.benchmark)
    result = emit_clean(info["source_path"], justification.keys(),
                        justification, args.out, manifest_out,
                        manifest_header=header)
    result.update({"out": args.out, "manifest": manifest_out})
    print(json.dumps(result))
    return 0


def _cmd_autodetect(args) -> int:
    from .annotation import AnnotationStore
    from .jsonl import make_header, read_artifact, write_artifact
    from .report import build_autodetect

    store = AnnotationStore(args.store)
    leaked = store.leaked_samples()
    samples: list[tuple[str, str, str]] = []
    for dataset, info in sorted(store.meta.get("benchmarks", {}).items()):
        leaked_ids = leaked.get(dataset, set())
        _, rows = read_artifact(info["doc_file"])
        for row in rows:
            key = f"{dataset}::{row['id']}"
            gold = "leaked" if key in leaked_ids else "non_leaked"
            samples.append((key, row["text"], gold))
    result = build_autodetect(samples, seed=args.seed)
    header = make_header("detectleak-autodetect-bench",
                         config=store.meta.get("config"),
                         class_counts=result["class_counts"],
                         seed=args.seed)
    write_artifact(args.out, header, result["samples"])
    print(json.dumps({"samples": len(result["samples"]),
                      "class_counts": result["class_counts"],
                      "out": args.out}))
    return 0


def _cmd_ppl_eval(args) -> int:
    from .jsonl import atomic_write_json
    from .ppl import accuracy_curve, distribution_export, load_scores

    records, rejected = load_scores(args.scores)
    if not records:
        raise DataError(f"no usable records in {args.scores}")
    ks = _parse_ks(args.ks, len(records))
    curve = accuracy_curve(records, ks)
    payload = {
        "n": len(records),
        "rejected": rejected,
        "curve": [{"k": k, "accuracy": acc} for k, acc in curve],
    }
    atomic_write_json(args.out, payload)
    if args.dist:
        atomic_write_json(args.dist, distribution_export(
            records, bins=args.bins, trim_pct=args.trim_pct))
    print(json.dumps(payload["curve"]))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "ingest": lambda args: _cmd_single_stage(args, "ingest"),
    "sketch": lambda args: _cmd_single_stage(args, "sketch"),
    "index": lambda args: _cmd_single_stage(args, "index"),
    "scan": _cmd_scan,
    "make-fixture": _cmd_make_fixture,
    "assign": _cmd_assign,
    "serve": _cmd_serve,
    "kappa": _cmd_kappa,
    "export-labels": _cmd_export_labels,
    "report": _cmd_report,
    "clean": _cmd_clean,
    "autodetect-bench": _cmd_autodetect,
    "ppl-eval": _cmd_ppl_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s %(message)s",
            stream=sys.stderr)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except DetectLeakError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - top-level guard
        log.exception("internal error")
        return 3


if __name__ == "__main__":
    sys.exit(main())
