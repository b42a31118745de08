import numpy as np
from helpers import make_set_pair

from detectleak.lsh import build_index, plan_bands
from detectleak.sketch import minhash_batch, shingle
from detectleak.verify import (EXACT_COPY_HINT, CandidatePair, ScanStats,
                               make_pair_id, scan, verify)


def candidate(bench, corpus, est=0.9):
    return CandidatePair(pair_id=make_pair_id(bench, corpus),
                         bench_id=bench, corpus_id=corpus, est_jaccard=est)


class TestPairId:
    def test_deterministic_and_order_sensitive(self):
        a = make_pair_id("b::1", "c::2")
        assert a == make_pair_id("b::1", "c::2")
        assert a != make_pair_id("c::2", "b::1")


class TestVerify:
    def test_planted_exact_duplicate(self):
        text = "def add(a, b): return a + b"
        sets = {"b::x": shingle(text, 2), "c::y": shingle(text, 2)}
        texts = {"b::x": text, "c::y": text}
        flagged, quarantined = verify(
            [candidate("b::x", "c::y")], sets.get, threshold=0.7,
            texts=texts.get)
        assert not quarantined
        assert flagged[0].exact_jaccard == 1.0
        assert flagged[0].status == "flagged"
        assert flagged[0].suggested == EXACT_COPY_HINT

    def test_below_threshold_dropped(self, rng):
        a, b, true_j = make_set_pair(rng, 0.42)
        sets = {"b::x": a, "c::y": b}
        stats = ScanStats(benchmark="t")
        flagged, _ = verify([candidate("b::x", "c::y")], sets.get,
                            threshold=0.7, stats=stats)
        assert flagged == []
        assert stats.dropped == 1

    def test_missing_shingles_quarantined(self, rng):
        a, _, _ = make_set_pair(rng, 0.9)
        sets = {"b::x": a}
        stats = ScanStats(benchmark="t")
        flagged, quarantined = verify([candidate("b::x", "c::gone")],
                                      sets.get, threshold=0.7, stats=stats)
        assert flagged == []
        assert [c.corpus_id for c in quarantined] == ["c::gone"]
        assert stats.quarantined == 1

    def test_batch_matches_bruteforce_oracle(self, rng):
        # 1k candidates with random overlap; the oracle flags by recomputing
        # Jaccard from raw python sets.
        threshold = 0.7
        cands = []
        sets = {}
        raw = {}
        expected = set()
        for i in range(1000):
            j = float(rng.uniform(0, 1))
            a, b, _ = make_set_pair(rng, j, union_size=80)
            bench, corpus = f"b::{i}", f"c::{i}"
            sets[bench], sets[corpus] = a, b
            raw[bench] = set(int(x) for x in a.hashes)
            raw[corpus] = set(int(x) for x in b.hashes)
            cands.append(candidate(bench, corpus))
            inter = len(raw[bench] & raw[corpus])
            union = len(raw[bench] | raw[corpus])
            if inter / union >= threshold:
                expected.add((bench, corpus))
        flagged, _ = verify(cands, sets.get, threshold=threshold)
        got = {(c.bench_id, c.corpus_id) for c in flagged}
        assert got == expected

    def test_soundness_every_flagged_clears_threshold(self, rng):
        cands = []
        sets = {}
        for i in range(100):
            a, b, _ = make_set_pair(rng, float(rng.uniform(0, 1)), 60)
            sets[f"b::{i}"], sets[f"c::{i}"] = a, b
            cands.append(candidate(f"b::{i}", f"c::{i}"))
        flagged, _ = verify(cands, sets.get, threshold=0.7)
        assert all(pair.exact_jaccard >= 0.7 for pair in flagged)


def build_fixture_index(rng, corpus_sets, num_perm=128, seed=5):
    params = plan_bands(num_perm, 0.7)
    mins = minhash_batch([s.hashes for s in corpus_sets.values()],
                         num_perm=num_perm, seed=seed)
    index = build_index(zip(corpus_sets.keys(), mins), params, seed=seed)
    return index, mins


class TestScan:
    def test_zero_collision_benchmark(self, rng):
        corpus_sets = {f"c::{i}": make_set_pair(rng, 0.0, 100)[0]
                       for i in range(50)}
        index, _ = build_fixture_index(rng, corpus_sets)
        bench_sets = {f"b::{i}": make_set_pair(rng, 0.0, 100)[0]
                      for i in range(10)}
        bench_mins = minhash_batch([s.hashes for s in bench_sets.values()],
                                   num_perm=128, seed=5)
        lookup = {**corpus_sets, **bench_sets}
        flagged, stats, _ = scan("bench", list(bench_sets.keys()), bench_mins,
                                 index, lookup.get, threshold=0.7)
        assert flagged == [] and stats.flagged == 0

    def test_multiplicity_three_corpus_copies(self, rng):
        base, _, _ = make_set_pair(rng, 1.0, 100)
        corpus_sets = {f"c::{i}": make_set_pair(rng, 0.0, 100)[0]
                       for i in range(30)}
        for i in range(3):
            corpus_sets[f"cdup::{i}"] = base
        index, _ = build_fixture_index(rng, corpus_sets)
        bench_sets = {"b::0": base}
        bench_mins = minhash_batch([base.hashes], num_perm=128, seed=5)
        lookup = {**corpus_sets, **bench_sets}
        flagged, stats, _ = scan("bench", ["b::0"], bench_mins, index,
                                 lookup.get, threshold=0.7)
        assert stats.flagged == 3
        assert {c.corpus_id for c in flagged} == {"cdup::0", "cdup::1",
                                                  "cdup::2"}

    def test_planted_fixture_matches_oracle(self, rng):
        # 1k corpus docs, 100 planted into a benchmark; oracle is the
        # exhaustive all-pairs comparison at the same threshold.
        threshold = 0.7
        corpus_sets = {}
        for i in range(1000):
            corpus_sets[f"c::{i}"] = make_set_pair(rng, 0.0, 120)[0]
        bench_sets = {}
        planted = {}
        for i in range(100):
            if i < 50:
                src = f"c::{i * 7}"
                a = corpus_sets[src]
                bench_sets[f"b::{i}"] = a
            else:
                bench_sets[f"b::{i}"] = make_set_pair(rng, 0.0, 120)[0]
        index, _ = build_fixture_index(rng, corpus_sets)
        bench_mins = minhash_batch([s.hashes for s in bench_sets.values()],
                                   num_perm=128, seed=5)
        lookup = {**corpus_sets, **bench_sets}
        flagged, stats, _ = scan("bench", list(bench_sets.keys()), bench_mins,
                                 index, lookup.get, threshold=threshold)
        oracle = set()
        for bench, bset in bench_sets.items():
            braw = set(int(x) for x in bset.hashes)
            for corpus, cset in corpus_sets.items():
                craw = set(int(x) for x in cset.hashes)
                union = len(braw | craw)
                if union and len(braw & craw) / union >= threshold:
                    oracle.add((bench, corpus))
        assert {(c.bench_id, c.corpus_id) for c in flagged} == oracle
        assert stats.comparisons_avoided == (
            100 * index.doc_count - stats.unique_candidates)

    def test_output_sorted_and_deterministic(self, rng):
        corpus_sets = {f"c::{i}": make_set_pair(rng, 0.0, 60)[0]
                       for i in range(20)}
        shared = make_set_pair(rng, 1.0, 60)[0]
        for i in range(5):
            corpus_sets[f"cs::{i}"] = shared
        index, _ = build_fixture_index(rng, corpus_sets)
        bench_mins = minhash_batch([shared.hashes], num_perm=128, seed=5)
        lookup = dict(corpus_sets)
        lookup["b::0"] = shared
        first, _, _ = scan("bench", ["b::0"], bench_mins, index, lookup.get,
                           threshold=0.7)
        second, _, _ = scan("bench", ["b::0"], bench_mins, index, lookup.get,
                            threshold=0.7)
        assert [c.pair_id for c in first] == sorted(c.pair_id for c in first)
        assert [c.as_record() for c in first] == [c.as_record() for c in second]

    def test_empty_benchmark_warns_and_returns_empty(self, rng):
        corpus_sets = {f"c::{i}": make_set_pair(rng, 0.0, 60)[0]
                       for i in range(5)}
        index, _ = build_fixture_index(rng, corpus_sets)
        flagged, stats, quarantined = scan(
            "bench", [], np.empty((0, 128), dtype=np.uint64), index,
            corpus_sets.get, threshold=0.7)
        assert flagged == [] and quarantined == []
        assert stats.bench_docs == 0
