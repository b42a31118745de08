"""Synthetic corpora with planted duplicates.

Real pre-training corpora and benchmarks cannot ship with the toolkit, so
evaluation runs on generated fixtures: a corpus of random-token documents
and a benchmark where a known subset is planted from the corpus, either
verbatim or perturbed to a controlled Jaccard level. The ground truth is
written next to the data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .jsonl import atomic_write_json, write_jsonl
from .sketch import exact_jaccard, shingle


def _random_tokens(rng: np.random.Generator, count: int) -> list[str]:
    return [f"w{v}" for v in rng.integers(0, 10**12, count)]


def _perturb(rng: np.random.Generator, tokens: list[str],
             replacements: int) -> list[str]:
    """Swap out `replacements` tokens at well-spaced positions."""
    out = list(tokens)
    if replacements <= 0:
        return out
    stride = max(1, len(tokens) // (replacements + 1))
    positions = [(i + 1) * stride for i in range(replacements)]
    fresh = _random_tokens(rng, replacements)
    for pos, token in zip(positions, fresh):
        out[min(pos, len(out) - 1)] = token
    return out


def make_planted_fixture(out_dir: str | Path, n_corpus: int, n_bench: int,
                         n_exact: int, n_perturbed: int, seed: int = 0,
                         doc_tokens: int = 120, ngram: int = 2,
                         min_perturbed_jaccard: float = 0.85,
                         corpus_name: str = "synthetic-corpus",
                         bench_name: str = "synthetic-bench") -> dict:
    """Write corpus/benchmark record files, a dataset manifest, and the
    planted-pair ground truth under out_dir. Deterministic under seed."""
    if n_exact + n_perturbed > min(n_bench, n_corpus):
        raise ValueError("more planted docs than corpus/benchmark capacity")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng([seed, 0xF])

    repo_pool = [f"org{j}/repo{j % 7}" for j in range(max(4, n_corpus // 50))]
    corpus_tokens: list[list[str]] = []
    corpus_rows = []
    for i in range(n_corpus):
        tokens = _random_tokens(rng, doc_tokens)
        corpus_tokens.append(tokens)
        corpus_rows.append({
            "id": f"c{i:06d}",
            "text": " ".join(tokens),
            "repo": repo_pool[int(rng.integers(0, len(repo_pool)))],
            "meta": None,
        })

    planted = []
    bench_rows = []
    source_ids = rng.choice(n_corpus, size=n_exact + n_perturbed,
                            replace=False)
    for j in range(n_bench):
        doc_id = f"b{j:05d}"
        if j < n_exact:
            src = int(source_ids[j])
            text = " ".join(corpus_tokens[src])
            planted.append({"bench_id": doc_id,
                            "corpus_id": f"c{src:06d}",
                            "kind": "exact", "jaccard": 1.0})
        elif j < n_exact + n_perturbed:
            src = int(source_ids[j])
            base = corpus_tokens[src]
            while True:
                replacements = max(1, (doc_tokens - 1) // 40)
                tokens = _perturb(rng, base, replacements)
                jac = exact_jaccard(shingle(" ".join(base), ngram),
                                    shingle(" ".join(tokens), ngram))
                if jac >= min_perturbed_jaccard:
                    break
            text = " ".join(tokens)
            planted.append({"bench_id": doc_id,
                            "corpus_id": f"c{src:06d}",
                            "kind": "perturbed", "jaccard": jac})
        else:
            text = " ".join(_random_tokens(rng, doc_tokens))
        bench_rows.append({"id": doc_id, "text": text, "repo": None,
                           "meta": None})

    corpus_path = out_dir / "corpus.jsonl"
    bench_path = out_dir / "benchmark.jsonl"
    write_jsonl(corpus_path, corpus_rows)
    write_jsonl(bench_path, bench_rows)
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({
            "dataset": corpus_name, "origin": "corpus",
            "path": corpus_path.name, "text_field": "text"}) + "\n")
        handle.write(json.dumps({
            "dataset": bench_name, "origin": "benchmark",
            "path": bench_path.name, "text_field": "text"}) + "\n")
    truth = {
        "seed": seed,
        "corpus_dataset": corpus_name,
        "bench_dataset": bench_name,
        "n_corpus": n_corpus,
        "n_bench": n_bench,
        "planted": planted,
    }
    atomic_write_json(out_dir / "truth.json", truth)
    return {"manifest": str(manifest_path), "truth": truth,
            "corpus_path": str(corpus_path), "bench_path": str(bench_path)}
