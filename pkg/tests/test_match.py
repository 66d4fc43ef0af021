import io
import math
import random
from collections import Counter

import pytest

from evolog import corpus, match
from evolog.errors import DataError

from conftest import make_entry, make_review, utc


def vec(**counts):
    return match.TFVector(counts)


class TestTFVector:
    def test_counts_multiplicity(self):
        assert match.tf_vector(["a", "b", "a"]).counts == {"a": 2, "b": 1}

    def test_empty(self):
        v = match.tf_vector([])
        assert v.counts == {} and v.normsq == 0

    def test_corpus_tokenizer_counts(self):
        tokens = corpus.tokenize("open watermark on screen")
        assert match.tf_vector(tokens).counts == {
            "open": 1, "watermark": 1, "on": 1, "screen": 1}

    def test_rejects_zero_counts(self):
        with pytest.raises(ValueError):
            match.TFVector({"a": 0})


def brute_cosine(c1: dict, c2: dict) -> float:
    dot = sum(c1[t] * c2.get(t, 0) for t in c1)
    n1 = math.sqrt(sum(v * v for v in c1.values()))
    n2 = math.sqrt(sum(v * v for v in c2.values()))
    if n1 == 0 or n2 == 0:
        return 0.0
    return dot / (n1 * n2)


class TestCosine:
    def test_identical_vectors_exactly_one(self):
        v = vec(a=3, b=1, c=7)
        assert match.cosine(v, v) == 1.0

    def test_disjoint_supports_zero(self):
        assert match.cosine(vec(a=1, b=1), vec(c=1, d=1)) == 0.0

    def test_half_overlap(self):
        assert match.cosine(vec(a=1, b=1), vec(a=1, c=1)) == pytest.approx(0.5, abs=1e-12)

    def test_pinned_tokenizer_fixture(self):
        # the published example pair scores 0.58 under an unstated
        # tokenizer; under ours it is exactly 0.6
        v1 = match.tf_vector(corpus.tokenize("Perfectly compatible with iOS 10"))
        v2 = match.tf_vector(corpus.tokenize("Perfectly compatible with iPad, 10/10"))
        assert match.cosine(v1, v2) == pytest.approx(0.6, abs=1e-12)

    def test_empty_vector_scores_zero(self):
        assert match.cosine(vec(), vec(a=1)) == 0.0
        assert match.cosine(vec(a=1), vec()) == 0.0

    def test_against_brute_force_oracle(self):
        rng = random.Random(2024)
        for _ in range(400):
            c1 = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(30), rng.randint(0, 12))}
            c2 = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(30), rng.randint(0, 12))}
            got = match.cosine(match.TFVector(c1), match.TFVector(c2))
            assert got == pytest.approx(brute_cosine(c1, c2), abs=1e-12)

    def test_symmetry_exact(self):
        rng = random.Random(7)
        for _ in range(200):
            c1 = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(20), rng.randint(1, 8))}
            c2 = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(20), rng.randint(1, 8))}
            v1, v2 = match.TFVector(c1), match.TFVector(c2)
            assert match.cosine(v1, v2) == match.cosine(v2, v1)

    def test_scale_invariance(self):
        rng = random.Random(13)
        for _ in range(100):
            c = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(20), rng.randint(1, 8))}
            d = {f"t{k}": rng.randint(1, 9) for k in rng.sample(range(20), rng.randint(1, 8))}
            u, v = match.TFVector(c), match.TFVector(d)
            base = match.cosine(u, v)
            for k in (2, 3, 5):
                assert match.cosine(u.scaled(k), v) == pytest.approx(base, abs=1e-12)


def build_corpus(entry_texts, review_texts):
    timeline = corpus.EntryTimeline("app", [
        make_entry(f"e{i}", text=t, released=utc(2021, 1, 1 + i))
        for i, t in enumerate(entry_texts, start=1)
    ])
    reviews = corpus.ReviewSet("app", [
        make_review(f"r{j}", body=t, created=utc(2021, 2, 1, j % 24))
        for j, t in enumerate(review_texts, start=1)
    ])
    return timeline, reviews


class TestCandidatePairs:
    def test_threshold_inclusive_at_boundary(self):
        # one shared token out of 4 vs 1+1: sim = 1/(2*sqrt(2)) ~ 0.354;
        # craft an exact 0.3 with 3/(sqrt(10)*sqrt(10))
        timeline, reviews = build_corpus(
            ["alpha beta gamma"],  # normsq 3
            ["alpha beta gamma delta epsilon zeta eta theta iota kappa"],  # shares 3, normsq 10
        )
        # sim = 3/sqrt(3*10) = 0.5477...; craft boundary by threshold instead
        pairs = match.candidate_pairs(timeline, reviews, theta=3 / math.sqrt(30))
        assert len(pairs) == 1

    def test_sim_exactly_theta_included(self):
        timeline, reviews = build_corpus(["a b"], ["a c"])  # sim exactly 0.5
        assert len(match.candidate_pairs(timeline, reviews, theta=0.5)) == 1

    def test_just_below_theta_excluded(self):
        timeline, reviews = build_corpus(["a b"], ["a c"])  # sim 0.5
        assert match.candidate_pairs(timeline, reviews, theta=0.500001) == []

    def test_empty_reviews(self):
        timeline, reviews = build_corpus(["a b"], [])
        assert match.candidate_pairs(timeline, reviews) == []

    def test_sorted_by_entry_then_descending_sim(self):
        timeline, reviews = build_corpus(
            ["alpha beta", "gamma delta"],
            ["alpha beta", "alpha zeta", "gamma delta", "gamma eta"],
        )
        pairs = match.candidate_pairs(timeline, reviews, theta=0.3)
        keys = [(p.entry_id, -p.sim, p.review_id) for p in pairs]
        assert keys == sorted(keys)
        assert pairs[0].sim == 1.0 and pairs[0].entry_id == "e1"

    def test_antitone_in_theta(self):
        rng = random.Random(31)
        words = [f"w{k}" for k in range(12)]
        timeline, reviews = build_corpus(
            [" ".join(rng.sample(words, 4)) for _ in range(6)],
            [" ".join(rng.choices(words, k=rng.randint(1, 8))) for _ in range(25)],
        )
        thetas = [0.1, 0.3, 0.5, 0.9]
        sets = [
            {(p.entry_id, p.review_id) for p in match.candidate_pairs(timeline, reviews, t)}
            for t in thetas
        ]
        for smaller, larger in zip(sets[1:], sets[:-1]):
            assert smaller <= larger


class TestDecide:
    def test_at_threshold(self):
        assert match.decide(0.5) == 1

    def test_below_threshold(self):
        assert match.decide(0.49) == 0

    def test_certain(self):
        assert match.decide(1.0) == 1

    def test_out_of_range(self):
        with pytest.raises(DataError):
            match.decide(1.2)
        with pytest.raises(DataError):
            match.decide(-0.1)

    def test_monotone(self):
        grid = [k / 100 for k in range(101)]
        decisions = [match.decide(p) for p in grid]
        assert decisions == sorted(decisions)


class TestImportScores:
    def test_lookup_and_default(self, tmp_path):
        p = tmp_path / "scores.jsonl"
        p.write_text('{"entry_id": "e1", "review_id": "r1", "p": 0.9}\n', encoding="utf-8")
        scorer = match.import_scores(str(p))
        assert scorer("e1", "r1") == 0.9
        assert scorer("e1", "r2") == 0.0

    def test_out_of_range_positioned(self, tmp_path):
        p = tmp_path / "scores.jsonl"
        p.write_text('{"entry_id": "e1", "review_id": "r1", "p": 1.5}\n', encoding="utf-8")
        with pytest.raises(DataError, match=":1:"):
            match.import_scores(str(p))

    def test_duplicate_pair_errors(self, tmp_path):
        p = tmp_path / "scores.jsonl"
        row = '{"entry_id": "e1", "review_id": "r1", "p": 0.9}\n'
        p.write_text(row + row, encoding="utf-8")
        with pytest.raises(DataError, match="duplicate"):
            match.import_scores(str(p))

    def test_unknown_ids_positioned(self, tmp_path):
        p = tmp_path / "scores.jsonl"
        p.write_text('{"entry_id": "eX", "review_id": "r1", "p": 0.9}\n', encoding="utf-8")
        with pytest.raises(DataError, match="unknown entry_id"):
            match.import_scores(str(p), entry_ids=["e1"], review_ids=["r1"])


class TestMatchAll:
    def test_constant_zero_scorer(self):
        timeline, reviews = build_corpus(["a b", "c d"], ["e f", "g h"])
        records = match.match_all(timeline, reviews, lambda e, r: 0.0, match.MODE_IMPORTED)
        assert len(records) == 4
        assert all(m.decision == 0 for m in records)

    def test_imported_two_by_two(self, tmp_path):
        timeline, reviews = build_corpus(["a b", "c d"], ["e f", "g h"])
        p = tmp_path / "scores.jsonl"
        p.write_text('{"entry_id": "e1", "review_id": "r1", "p": 0.8}\n', encoding="utf-8")
        scorer = match.import_scores(str(p))
        records = match.match_all(timeline, reviews, scorer, match.MODE_IMPORTED)
        decided = [(m.entry_id, m.review_id) for m in records if m.decision == 1]
        assert decided == [("e1", "r1")]
        assert all(m.source == "imported" for m in records)

    def test_native_identical_text_matches(self):
        timeline, reviews = build_corpus(["dark mode toggle"], ["dark mode toggle"])
        records = match.match_all(timeline, reviews, mode=match.MODE_NATIVE)
        assert records[0].decision == 1
        assert records[0].score == 1.0
        assert records[0].source == "native-cosine"

    def test_output_order_is_id_ascending(self):
        timeline, reviews = build_corpus(["a", "b", "c"], ["x", "y"])
        records = match.match_all(timeline, reviews, lambda e, r: 0.1, match.MODE_IMPORTED)
        keys = [(m.entry_id, m.review_id) for m in records]
        assert keys == sorted(keys)

    def test_native_equals_exhaustive_reference(self):
        rng = random.Random(99)
        words = [f"w{k}" for k in range(15)]
        for _ in range(10):
            n_e, n_r = rng.randint(1, 8), rng.randint(1, 15)
            timeline, reviews = build_corpus(
                [" ".join(rng.choices(words, k=rng.randint(1, 6))) for _ in range(n_e)],
                [" ".join(rng.choices(words, k=rng.randint(0, 9))) or "" for _ in range(n_r)],
            )
            records = match.match_all(timeline, reviews, mode=match.MODE_NATIVE)
            by_pair = {(m.entry_id, m.review_id): m for m in records}
            assert len(records) == n_e * n_r
            for e in timeline.entries:
                for r in reviews.reviews:
                    expected = min(1.0, brute_cosine(
                        Counter(corpus.tokenize(e.text)), Counter(corpus.tokenize(r.body))))
                    m = by_pair[(e.entry_id, r.review_id)]
                    assert m.score == pytest.approx(expected, abs=1e-12)
                    assert m.decision == (1 if m.score >= 0.5 else 0)

    def test_jsonl_round_trip(self):
        timeline, reviews = build_corpus(["a b"], ["a b", "c"])
        records = match.match_all(timeline, reviews, mode=match.MODE_NATIVE)
        text = match.matches_to_jsonl(records)
        back = match.matches_from_jsonl(text)
        assert back == records

    def test_decision_threshold_override(self):
        timeline, reviews = build_corpus(["a b c d"], ["a b c d", "a b c x"])
        # sims: 1.0 and 0.75
        default = match.match_all(timeline, reviews, mode=match.MODE_NATIVE)
        assert [m.decision for m in default] == [1, 1]
        strict = match.match_all(timeline, reviews, mode=match.MODE_NATIVE, threshold=0.9)
        assert [m.decision for m in strict] == [1, 0]
        with pytest.raises(DataError):
            match.match_all(timeline, reviews, mode=match.MODE_NATIVE, threshold=1.5)


class TestSampleNegatives:
    ENTRIES = ["e1", "e2", "e3"]
    REVIEWS = ["r1", "r2", "r3"]
    POSITIVES = [("e1", "r1"), ("e2", "r2")]

    def test_frozen_seed_zero(self):
        negs = match.sample_negatives(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=0)
        assert negs == [("e3", "r1"), ("e3", "r3")]

    def test_sampled_from_complement(self):
        negs = match.sample_negatives(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=0)
        complement = {
            (e, r) for e in self.ENTRIES for r in self.REVIEWS
        } - set(self.POSITIVES)
        assert set(negs) <= complement
        assert len(negs) == len(self.POSITIVES)

    def test_deterministic(self):
        a = match.sample_negatives(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=5)
        b = match.sample_negatives(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=5)
        assert a == b

    def test_insufficient_pool(self):
        positives = [(f"e{i}", f"r{j}") for i in (1, 2, 3) for j in (1, 2)][:5]
        with pytest.raises(DataError, match="need 5, only 4"):
            match.sample_negatives(positives, self.ENTRIES, self.REVIEWS, seed=0)

    def test_every_complement_pair_reachable(self):
        # across seeds the sampler covers the whole complement
        seen = set()
        for seed in range(60):
            seen |= set(match.sample_negatives(self.POSITIVES, self.ENTRIES,
                                               self.REVIEWS, seed=seed))
        complement = {(e, r) for e in self.ENTRIES for r in self.REVIEWS} - set(self.POSITIVES)
        assert seen == complement

    def test_gold_pair_set_invariants(self):
        gold = match.build_gold_pairs(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=3)
        assert len(gold.positives) == len(gold.negatives)
        assert not set(gold.positives) & set(gold.negatives)

    def test_gold_tsv_round_trip(self, tmp_path):
        gold = match.build_gold_pairs(self.POSITIVES, self.ENTRIES, self.REVIEWS, seed=3)
        p = tmp_path / "gold.tsv"
        p.write_text(match.write_gold_pairs(gold), encoding="utf-8")
        pos, neg = match.load_gold_pairs(str(p))
        assert pos == gold.positives and neg == gold.negatives


class TestWorklist:
    def test_one_row_per_candidate(self):
        timeline, reviews = build_corpus(
            ["alpha beta gamma delta"],
            ["alpha beta gamma delta", "alpha noise", "unrelated words"],
        )
        pairs = match.candidate_pairs(timeline, reviews, 0.3)
        buf = io.StringIO()
        match.write_worklist(pairs, timeline, reviews, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "entry_id,review_id,sim,entry_text,review_text,label"
        assert len(lines) == 1 + len(pairs)
        first = lines[1].split(",")
        assert first[0] == "e1" and first[1] == "r1"
        assert float(first[2]) == 1.0
