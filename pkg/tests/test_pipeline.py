"""Input construction, masking, the synthetic scorer, and rerank orchestration."""

import itertools

import numpy as np
import pytest

from injectrank.errors import DataFormatError, TransportError
from injectrank.lexical import RankedList
from injectrank.normalize import NormalizationConfig
from injectrank.pipeline import (
    RerankConfig,
    ScorerInput,
    SyntheticScorer,
    build_input,
    mask_non_query_words,
    rerank,
    score_in_batches,
    synthetic_score,
    truncate_tokens,
)


class TestTruncateTokens:
    def test_short_text_unchanged(self):
        assert truncate_tokens("five tokens of plain text", 30) == "five tokens of plain text"

    def test_caps_long_text(self):
        text = " ".join(f"t{i}" for i in range(250))
        out = truncate_tokens(text, 200)
        assert out.split() == [f"t{i}" for i in range(200)]

    def test_empty(self):
        assert truncate_tokens("", 30) == ""

    def test_whitespace_collapsed(self):
        assert truncate_tokens("a   b\tc\nd", 3) == "a b c"


class TestBuildInput:
    def test_injected_token_carried(self):
        cfg = RerankConfig(injection=True)
        inp = build_input("what is the shingles jab?", "the shingles vaccine",
                          "22", cfg, pair_id="q#p")
        assert inp.score_token == "22"
        assert inp.query_text == "what is the shingles jab?"

    def test_injection_off_drops_token(self):
        cfg = RerankConfig(injection=False)
        inp = build_input("q", "p", "42", cfg)
        assert inp.score_token is None

    def test_injection_on_requires_token(self):
        cfg = RerankConfig(injection=True)
        with pytest.raises(ValueError):
            build_input("q", "p", None, cfg)

    def test_caps_applied(self):
        cfg = RerankConfig(query_token_cap=2, passage_token_cap=3, injection=False)
        inp = build_input("a b c d", "p q r s t", None, cfg)
        assert inp.query_text == "a b"
        assert inp.passage_text == "p q r"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RerankConfig(depth=0)
        with pytest.raises(ValueError):
            RerankConfig(query_token_cap=0)


class TestMasking:
    def test_stated_example(self):
        out = mask_non_query_words("what is the shingles jab", "the flu jab")
        assert out == "the [MASK] jab"

    def test_zero_overlap_masks_everything(self):
        out = mask_non_query_words("alpha beta", "gamma delta epsilon")
        assert out == "[MASK] [MASK] [MASK]"

    def test_passage_equal_to_query_unchanged(self):
        assert mask_non_query_words("the cat", "the cat") == "the cat"

    def test_case_and_punctuation_folded(self):
        out = mask_non_query_words("Shingles jab", "SHINGLES, jab! vaccine")
        assert out == "SHINGLES, jab! [MASK]"

    def test_punctuation_only_tokens_kept(self):
        out = mask_non_query_words("a b", "a . b - c")
        assert out == "a . b - [MASK]"

    def test_idempotent(self):
        rng = np.random.default_rng(23)
        words = [f"w{i}" for i in range(30)]
        for _ in range(50):
            query = " ".join(rng.choice(words, size=5))
            passage = " ".join(rng.choice(words, size=12))
            once = mask_non_query_words(query, passage)
            assert mask_non_query_words(query, once) == once

    def test_custom_literal(self):
        assert mask_non_query_words("a", "a b", mask_literal="<gap>") == "a <gap>"


class TestSyntheticScore:
    def test_identical_texts_no_token(self):
        inp = ScorerInput("p", "the cat sat", "the cat sat", None)
        assert synthetic_score(inp) == 0.5

    def test_disjoint_with_token_100(self):
        inp = ScorerInput("p", "aaa bbb", "ccc ddd", "100")
        assert synthetic_score(inp) == pytest.approx(0.1)

    def test_disjoint_no_token(self):
        assert synthetic_score(ScorerInput("p", "aaa", "bbb", None)) == 0.0

    def test_token_contribution_saturates(self):
        low = synthetic_score(ScorerInput("p", "a", "b", "300"))
        high = synthetic_score(ScorerInput("p", "a", "b", "900"))
        assert low == pytest.approx(0.3)
        assert high == pytest.approx(0.4)

    def test_monotone_in_token(self):
        scores = [synthetic_score(ScorerInput("p", "a b", "a c", str(t)))
                  for t in range(0, 401, 50)]
        assert scores == sorted(scores)

    def test_unparsable_token_is_zero(self):
        assert (synthetic_score(ScorerInput("p", "a", "b", "7.45"))
                == synthetic_score(ScorerInput("p", "a", "b", None)))

    def test_negative_token_floors_at_zero(self):
        assert synthetic_score(ScorerInput("p", "a", "b", "-100")) == 0.0

    def test_pair_hash_disabled_by_default(self):
        a = synthetic_score(ScorerInput("idA", "x", "x", None))
        b = synthetic_score(ScorerInput("idB", "x", "x", None))
        assert a == b == 0.5

    def test_pair_hash_flag(self):
        inputs = [ScorerInput(f"id{i}", "x", "y", None) for i in range(20)]
        hashed = {synthetic_score(i, use_pair_hash=True) for i in inputs}
        assert hashed <= {0.0, 0.1}
        assert len(hashed) == 2  # both hash bits occur


def _passages(**kwargs):
    return dict(kwargs)


class TestRerank:
    def test_output_is_permutation_of_top_depth(self):
        candidates = RankedList("q", [("a", 3.0), ("b", 2.0), ("c", 1.0)])
        cfg = RerankConfig(depth=2, injection=False)
        out = rerank("some query", candidates, SyntheticScorer(), cfg,
                     _passages(a="x", b="some query", c="zzz"))
        assert sorted(out.doc_ids()) == ["a", "b"]

    def test_identical_passages_fall_back_to_doc_id(self):
        candidates = RankedList("q", [("c", 3.0), ("a", 2.0), ("b", 1.0)])
        cfg = RerankConfig(injection=False)
        out = rerank("query words", candidates, SyntheticScorer(), cfg,
                     _passages(a="same text", b="same text", c="same text"))
        assert out.doc_ids() == ["a", "b", "c"]

    def test_injected_token_breaks_overlap_tie(self):
        # equal passages, bm25 scores 0.9 vs 0.1 as original/int tokens "90"/"10"
        candidates = RankedList("q", [("hi", 0.9), ("lo", 0.1)])
        cfg = RerankConfig(
            injection=True,
            normalization=NormalizationConfig(method="original", representation="int"),
        )
        out = rerank("query", candidates, SyntheticScorer(), cfg,
                     _passages(hi="same passage", lo="same passage"))
        assert out.doc_ids() == ["hi", "lo"]
        # and the reverse when the scores swap
        candidates = RankedList("q", [("lo", 0.9), ("hi", 0.1)])
        out = rerank("query", candidates, SyntheticScorer(), cfg,
                     _passages(hi="same passage", lo="same passage"))
        assert out.doc_ids() == ["lo", "hi"]

    def test_depth_one(self):
        candidates = RankedList("q", [("a", 2.0), ("b", 1.0)])
        cfg = RerankConfig(depth=1, injection=False)
        out = rerank("q", candidates, SyntheticScorer(), cfg, _passages(a="x", b="y"))
        assert len(out) == 1
        assert out.doc_ids() == ["a"]

    def test_constant_token_matches_injection_off(self):
        rng = np.random.default_rng(31)
        words = [f"w{i}" for i in range(15)]
        passages = {f"d{i}": " ".join(rng.choice(words, size=8)) for i in range(12)}
        # equal first-stage scores make every token identical under global minmax
        candidates = RankedList("q", sorted(((d, 5.0) for d in passages),
                                            key=lambda e: e[0]))
        query = " ".join(rng.choice(words, size=5))
        plain = rerank(query, candidates, SyntheticScorer(),
                       RerankConfig(injection=False), passages)
        injected = rerank(query, candidates, SyntheticScorer(),
                          RerankConfig(injection=True), passages)
        assert plain.doc_ids() == injected.doc_ids()

    def test_batching_invariance(self):
        rng = np.random.default_rng(37)
        words = [f"w{i}" for i in range(20)]
        passages = {f"d{i}": " ".join(rng.choice(words, size=10)) for i in range(23)}
        candidates = RankedList("q", [(d, float(50 - i)) for i, d in
                                      enumerate(sorted(passages))])
        query = " ".join(rng.choice(words, size=6))
        cfg = RerankConfig(injection=True)
        results = [
            rerank(query, candidates, SyntheticScorer(batch_size=bs), cfg, passages)
            for bs in (1, 2, 7, 23, 100)
        ]
        for other in results[1:]:
            assert other.entries == results[0].entries

    def test_missing_passage_is_a_data_error(self):
        candidates = RankedList("q", [("a", 1.0)])
        with pytest.raises(DataFormatError):
            rerank("q", candidates, SyntheticScorer(), RerankConfig(injection=False), {})

    def test_mask_exact_changes_scoring(self):
        candidates = RankedList("q", [("a", 1.0)])
        passages = _passages(a="apple banana cherry")
        cfg = RerankConfig(injection=False)
        plain = rerank("apple", candidates, SyntheticScorer(), cfg, passages)
        masked = rerank("apple", candidates, SyntheticScorer(), cfg, passages,
                        mask_exact=True)
        # masked passage is "apple [MASK] [MASK]": same overlap set but
        # different non-query vocabulary, so the Jaccard denominator shrinks
        assert masked.entries[0][1] != plain.entries[0][1]

    def test_injection_toggle_changes_ranking_iff_tokens_differ(self):
        # overlap ordering favors doc "b"; first-stage scores favor doc "a"
        # strongly enough that its token saturates the scorer's token term
        passages = _passages(a="query terms here", b="query terms match more")
        candidates = RankedList("q", [("a", 350.0), ("b", 0.0)])
        query = "query terms match more"
        cfg_off = RerankConfig(injection=False)
        cfg_on = RerankConfig(injection=True)  # global minmax integer default
        off = rerank(query, candidates, SyntheticScorer(), cfg_off, passages)
        on = rerank(query, candidates, SyntheticScorer(), cfg_on, passages)
        assert off.doc_ids() == ["b", "a"]
        assert on.doc_ids() == ["a", "b"]


class _LossyScorer(SyntheticScorer):
    def score_batch(self, inputs):
        scores = super().score_batch(inputs)
        scores.pop(inputs[-1].pair_id)
        return scores


class TestScoreInBatches:
    def test_missing_ids_raise_transport_error(self):
        inputs = [ScorerInput(f"p{i}", "q", "p", None) for i in range(4)]
        with pytest.raises(TransportError) as excinfo:
            score_in_batches(_LossyScorer(batch_size=2), inputs)
        assert excinfo.value.pair_ids == ("p1",)

    def test_batch_partitioning(self):
        calls = []

        class Recording(SyntheticScorer):
            def score_batch(self, inputs):
                calls.append(len(inputs))
                return super().score_batch(inputs)

        inputs = [ScorerInput(f"p{i}", "q", "p", None) for i in range(7)]
        score_in_batches(Recording(batch_size=3), inputs)
        assert calls == [3, 3, 1]
