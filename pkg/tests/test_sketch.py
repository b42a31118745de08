import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_set_pair

from detectleak import _kernels
from detectleak.errors import UsageError
from detectleak.sketch import (estimate_jaccard, exact_jaccard,
                               fingerprint64, minhash, minhash_batch,
                               permutation_params, shingle,
                               shingle_set_from_hashes)


class TestShingle:
    def test_bigrams_of_three_tokens(self):
        s = shingle("a b c", 2)
        assert len(s) == 2
        expected = {fingerprint64("a b"), fingerprint64("b c")}
        assert set(int(h) for h in s.hashes) == expected

    def test_short_input_single_shingle(self):
        s = shingle("hello", 2)
        assert len(s) == 1
        assert int(s.hashes[0]) == fingerprint64("hello")

    def test_empty_input(self):
        s = shingle("...", 2)  # no word characters at all
        assert len(s) == 0 and s.token_count == 0

    def test_two_hundred_distinct_tokens(self):
        tokens = [f"tok{i}" for i in range(200)]
        s = shingle(" ".join(tokens), 2)
        assert len(s) == 199

    def test_window_bound_invariant(self):
        s = shingle("a b a b a", 2)  # repeated bigrams deduplicate
        assert len(s) <= max(1, s.token_count - 2 + 1)
        assert len(s) == 2

    def test_char_ngrams(self):
        s = shingle("abcd", 2, chars=True)
        assert set(int(h) for h in s.hashes) == {
            fingerprint64("ab"), fingerprint64("bc"), fingerprint64("cd")}

    def test_tokenizer_splits_on_non_word(self):
        assert len(shingle("foo.bar(baz)", 1)) == 3


class TestMinHash:
    def test_identical_texts_identical_signatures(self):
        a = minhash(shingle("def f(x): return x + 1", 2))
        b = minhash(shingle("def f(x): return x + 1", 2))
        assert np.array_equal(a.mins, b.mins)

    def test_num_perm_floor(self):
        with pytest.raises(UsageError, match="num_perm"):
            minhash(shingle("a b", 2), num_perm=8)

    def test_empty_sentinel_rules(self):
        empty = minhash(shingle("", 2))
        other_empty = minhash(shingle("!!!", 2))
        full = minhash(shingle("a b c", 2))
        assert empty.is_empty
        assert estimate_jaccard(empty, other_empty) == 1.0
        assert estimate_jaccard(empty, full) == 0.0

    def test_disjoint_sets_estimate_near_zero(self, rng):
        total = 0.0
        for _ in range(100):
            a, b, _ = make_set_pair(rng, 0.0)
            total += estimate_jaccard(minhash(a), minhash(b))
        assert total / 100 <= 0.05

    def test_half_overlap_estimate(self, rng):
        errs = []
        for _ in range(200):
            a, b, true_j = make_set_pair(rng, 0.5)
            errs.append(abs(estimate_jaccard(minhash(a), minhash(b)) - true_j))
        assert np.mean(errs) <= 0.05

    def test_mismatched_parameters_rejected(self):
        a = minhash(shingle("a b", 2), num_perm=32)
        b = minhash(shingle("a b", 2), num_perm=64)
        with pytest.raises(UsageError):
            estimate_jaccard(a, b)
        c = minhash(shingle("a b", 2), num_perm=32, seed=7)
        with pytest.raises(UsageError):
            estimate_jaccard(a, c)

    def test_estimate_close_to_exact_on_random_pairs(self, rng):
        num_perm = 256
        errs = []
        for _ in range(60):
            j = float(rng.uniform(0.1, 0.9))
            a, b, _ = make_set_pair(rng, j)
            exact = exact_jaccard(a, b)
            est = estimate_jaccard(minhash(a, num_perm), minhash(b, num_perm))
            errs.append(abs(est - exact))
        assert np.mean(errs) <= 4 / np.sqrt(num_perm)

    def test_seed_does_not_bias_estimates(self, rng):
        # Different seeds should give the same error profile up to noise.
        means = []
        for seed in (11, 2024):
            ests = [estimate_jaccard(minhash(a, seed=seed),
                                     minhash(b, seed=seed))
                    for a, b, _ in (make_set_pair(rng, 0.5)
                                    for _ in range(150))]
            means.append(np.mean(ests))
        # se of each mean ~ 0.031/sqrt(150) ~ 0.0026; allow 6 sigma
        assert abs(means[0] - means[1]) < 0.02


class TestExactJaccard:
    def test_hand_case(self):
        a = shingle_set_from_hashes([1, 2, 3])
        b = shingle_set_from_hashes([2, 3, 4])
        assert exact_jaccard(a, b) == 0.5

    def test_identity(self):
        a = shingle_set_from_hashes([5, 6, 7])
        assert exact_jaccard(a, a) == 1.0

    def test_empty_conventions(self):
        e = shingle_set_from_hashes([])
        f = shingle_set_from_hashes([1])
        assert exact_jaccard(e, e) == 1.0
        assert exact_jaccard(e, f) == 0.0

    def test_mismatched_n(self):
        with pytest.raises(UsageError, match="mismatch"):
            exact_jaccard(shingle("a b c", 2), shingle("a b c", 3))

    def test_against_bruteforce_oracle(self, rng):
        # Oracle counts intersections by scanning, no set machinery.
        for _ in range(500):
            xs = rng.integers(0, 50, size=rng.integers(1, 30)).tolist()
            ys = rng.integers(0, 50, size=rng.integers(1, 30)).tolist()
            xs_u = sorted(set(xs))
            ys_u = sorted(set(ys))
            inter = sum(1 for x in xs_u for y in ys_u if x == y)
            union = len(xs_u) + len(ys_u) - inter
            a = shingle_set_from_hashes(xs)
            b = shingle_set_from_hashes(ys)
            assert exact_jaccard(a, b) == pytest.approx(inter / union)

    @settings(max_examples=100)
    @given(st.lists(st.integers(min_value=0, max_value=40), min_size=1),
           st.lists(st.integers(min_value=0, max_value=40), min_size=1))
    def test_symmetry_and_bounds(self, xs, ys):
        a = shingle_set_from_hashes(xs)
        b = shingle_set_from_hashes(ys)
        assert exact_jaccard(a, b) == exact_jaccard(b, a)
        assert 0.0 <= exact_jaccard(a, b) <= 1.0
        assert exact_jaccard(a, a) == 1.0


class TestKernelParity:
    def test_backends_agree(self, rng):
        np_mins, np_keys = _kernels.get_backend("numpy")
        nb_mins, nb_keys = _kernels.get_backend("numba")
        sizes = rng.integers(0, 120, size=50)
        offsets = np.zeros(51, dtype=np.int64)
        offsets[1:] = np.cumsum(sizes)
        flat = rng.integers(0, 1 << 63, int(offsets[-1]), dtype=np.uint64)
        a, b = permutation_params(64, 3)
        got_np = np_mins(flat, offsets, a, b)
        got_nb = nb_mins(flat, offsets, a, b)
        assert np.array_equal(got_np, got_nb)
        salts = rng.integers(0, 1 << 63, 8, dtype=np.uint64)
        keys_np = np_keys(got_np, 8, 8, salts)
        keys_nb = nb_keys(got_nb, 8, 8, salts)
        assert np.array_equal(keys_np, keys_nb)

    def test_batch_matches_single(self, rng):
        sets = [shingle(f"alpha {i} beta {i * 7} gamma", 2).hashes
                for i in range(10)]
        batch = minhash_batch(sets, num_perm=32, seed=5)
        for i, hashes in enumerate(sets):
            single = minhash_batch([hashes], num_perm=32, seed=5)[0]
            assert np.array_equal(batch[i], single)

    def test_signature_values_below_prime_or_sentinel(self, rng):
        sets = [rng.integers(0, 1 << 63, 40, dtype=np.uint64),
                np.empty(0, dtype=np.uint64)]
        mins = minhash_batch(sets, num_perm=32, seed=5)
        assert mins[0].max() < int(_kernels.MERSENNE_31)
        assert np.all(mins[1] == _kernels.EMPTY_SENTINEL)
