import numpy as np
import pytest

from essrank.errors import ClampedBiasZero, EmptyInput, InvalidConfig, ProviderError
from essrank.expansion import (
    Query,
    build_bias_set,
    frp_btr_expand,
    frp_query,
    frw_query,
    mpb2_expand,
    prepend_entity,
    sentiment_qe,
)
from essrank.providers import StubProvider
from essrank.ranking import RankConfig, rank
from essrank.textproc import Phrase


class TestQueryType:
    def test_requires_terms(self):
        with pytest.raises(EmptyInput):
            Query(label="x", terms=())

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidConfig):
            Query(label="x", terms=("a", "A"))

    def test_text_joins_terms(self):
        assert Query(label="x", terms=("good", "price")).text == "good price"


class TestFrwQuery:
    def test_frequency_ranked_terms(self, stub):
        query = frw_query(["good price good battery", "good price"], n_terms=2, annotator=stub)
        assert list(query.terms) == ["good", "price"]

    def test_all_stopword_references_error(self, stub):
        with pytest.raises(EmptyInput):
            frw_query(["a the of"], annotator=stub)

    def test_single_reference(self, stub):
        assert list(frw_query(["battery"], annotator=stub).terms) == ["battery"]

    def test_empty_pool_errors(self, stub):
        with pytest.raises(EmptyInput):
            frw_query([], annotator=stub)

    def test_deterministic(self, stub):
        refs = ["battery price screen", "price battery"]
        assert frw_query(refs, annotator=stub).terms == frw_query(refs, annotator=stub).terms


class TestFrpQuery:
    def test_top_phrase(self, stub):
        query = frp_query(
            ["the battery life is poor", "the battery life drains"], annotator=stub
        )
        assert query.terms[0] == "the battery life"

    def test_no_noun_phrases_error(self, stub):
        with pytest.raises(EmptyInput):
            frp_query(["go quickly"], annotator=stub)

    def test_n_one_single_phrase(self, stub):
        query = frp_query(["the battery drains"], n_terms=1, annotator=stub)
        assert list(query.terms) == ["the battery"]


class TestFrpBtrExpand:
    def _pool(self, texts, freqs):
        return [Phrase(text=t, kind="noun", frequency=f) for t, f in zip(texts, freqs)]

    def test_seed_matching_phrase_is_kept(self, stub):
        pool = self._pool(["battery", "shipping box", "pebble"], [1, 1, 1])
        seed = Query(label="frp", terms=("battery",))
        out = frp_btr_expand(seed, pool, RankConfig(), stub)
        assert "battery" in out.terms
        assert out.label == "frp-btr"

    def test_frequency_rerank_breaks_equal_scores(self, stub):
        pool = self._pool(["alpha beta", "alpha gamma"], [2, 5])
        seed = Query(label="frp", terms=("alpha",))
        out = frp_btr_expand(seed, pool, RankConfig(), stub)
        assert list(out.terms) == ["alpha gamma", "alpha beta"]

    def test_n_out_larger_than_pool(self, stub):
        pool = self._pool(["battery", "screen"], [1, 1])
        seed = Query(label="frp", terms=("battery",))
        out = frp_btr_expand(seed, pool, RankConfig(), stub, n_out=50)
        assert set(out.terms) == {"battery", "screen"}

    def test_empty_pool_errors(self, stub):
        with pytest.raises(EmptyInput):
            frp_btr_expand(Query(label="frp", terms=("x",)), [], RankConfig(), stub)


class TestMpb2Expand:
    def test_election_gains_next_best(self, stub):
        provider = StubProvider(
            mask_table={"the [MASK] drains fast": ["battery", "charger"]}
        )
        seed = Query(label="frw", terms=("battery",))
        out = mpb2_expand(seed, ["the battery drains fast"], provider, annotator=stub)
        assert list(out.terms) == ["battery", "charger"]
        assert out.label == "frw-mpb2"

    def test_wrong_top_prediction_no_expansion(self, stub):
        provider = StubProvider(
            mask_table={"the [MASK] drains fast": ["charger", "battery"]}
        )
        seed = Query(label="frw", terms=("battery",))
        out = mpb2_expand(seed, ["the battery drains fast"], provider, annotator=stub)
        assert list(out.terms) == ["battery"]

    def test_absent_seed_term_contributes_nothing(self, stub):
        seed = Query(label="frw", terms=("battery",))
        out = mpb2_expand(seed, ["nothing relevant here"], StubProvider(), annotator=stub)
        assert list(out.terms) == ["battery"]

    def test_missing_provider_errors(self, stub):
        with pytest.raises(ProviderError):
            mpb2_expand(Query(label="frw", terms=("x",)), ["x"], None, annotator=stub)

    def test_expansions_are_filtered(self, stub):
        provider = StubProvider(
            mask_table={"a [MASK] here": [("thing", 0.9), ("the", 0.5), ("widget", 0.4)]}
        )
        seed = Query(label="frw", terms=("thing",))
        out = mpb2_expand(seed, ["a thing here"], provider, per_term_k=2, annotator=stub)
        assert "the" not in out.terms  # stopword-only expansion dropped
        assert "widget" in out.terms


class TestSentimentQe:
    def _pool(self, texts):
        return [Phrase(text=t, kind="noun") for t in texts]

    def test_literal_phrase_surfaces(self, stub):
        pool = self._pool(["poor experience", "shipping box", "pebble lantern"])
        out = sentiment_qe("negative", ("excellent service", "poor experience"), pool, stub)
        assert out.terms[0] == "poor experience"

    def test_k_at_least_pool_returns_whole_filtered_pool(self, stub):
        pool = self._pool(["alpha beta", "gamma delta"])
        out = sentiment_qe("positive", ("excellent service", "poor experience"), pool, stub, top_k=10)
        assert set(out.terms) == {"alpha beta", "gamma delta"}

    def test_negative_selects_second_pair_element(self, stub):
        pool = self._pool(["anything"])
        out = sentiment_qe("negative", ("excellent service", "poor experience"), pool, stub)
        assert out.seed_text == "poor experience"

    def test_output_size_is_min_k_pool(self, stub):
        pool = self._pool([f"item{n} widget" for n in range(8)])
        out = sentiment_qe("positive", ("excellent service", "poor experience"), pool, stub, top_k=3)
        assert len(out.terms) == 3

    def test_empty_pool_errors(self, stub):
        with pytest.raises(EmptyInput):
            sentiment_qe("negative", ("a", "b"), [], stub)


class TestFilterInvariants:
    """Expansion outputs are already clean: re-filtering changes nothing."""

    def _assert_filter_fixed_point(self, query, annotator):
        from essrank.textproc import filter_terms

        assert filter_terms(list(query.terms), annotator) == list(query.terms)

    def test_frw_frp_outputs(self, stub):
        refs = ["the battery life is poor", "the battery life drains", "poor battery again"]
        self._assert_filter_fixed_point(frw_query(refs, annotator=stub), stub)
        self._assert_filter_fixed_point(frp_query(refs, annotator=stub), stub)

    def test_frp_btr_output(self, stub):
        pool = [Phrase(text=t, kind="noun") for t in ("battery", "screen glass", "box")]
        seed = Query(label="frp", terms=("battery",))
        self._assert_filter_fixed_point(frp_btr_expand(seed, pool, RankConfig(), stub), stub)

    def test_sentiment_qe_output(self, stub):
        pool = [Phrase(text=t, kind="noun") for t in ("poor experience", "tight hinge", "the")]
        out = sentiment_qe("negative", ("excellent service", "poor experience"), pool, stub)
        self._assert_filter_fixed_point(out, stub)


class TestPrependEntity:
    def test_basic(self):
        out = prepend_entity(Query(label="x", terms=("poor experience",)), "AcmePhone")
        assert list(out.terms) == ["AcmePhone", "poor experience"]
        assert out.entity_prepended

    def test_idempotent(self):
        query = Query(label="x", terms=("poor experience",))
        once = prepend_entity(query, "AcmePhone")
        twice = prepend_entity(once, "AcmePhone")
        assert once == twice

    def test_empty_entity_unchanged(self):
        query = Query(label="x", terms=("poor experience",))
        assert prepend_entity(query, "  ") == query

    def test_preserves_term_order(self):
        query = Query(label="x", terms=("a1", "b2", "c3"))
        out = prepend_entity(query, "E")
        assert list(out.terms) == ["E", "a1", "b2", "c3"]


class TestBuildBiasSet:
    def test_identical_text_maximal_bias(self, stub):
        sentences = ["alpha beta", "gamma delta", "epsilon"]
        s = stub.embed(sentences)
        bias_set = build_bias_set([Query(label="user", terms=("gamma delta",))], s, stub)
        assert int(np.argmax(bias_set.bias_vectors[0])) == 1

    def test_one_row_per_query(self, stub):
        s = stub.embed(["alpha", "beta"])
        queries = [Query(label="q1", terms=("alpha",)), Query(label="q2", terms=("beta",))]
        bias_set = build_bias_set(queries, s, stub)
        assert bias_set.bias_vectors.shape == (2, 2)
        assert bias_set.provenance == ["embedding-similarity"] * 2

    def test_per_term_bias_rows(self, stub):
        s = stub.embed(["alpha", "beta"])
        queries = [Query(label="q", terms=("alpha", "beta", "gamma"))]
        bias_set = build_bias_set(queries, s, stub, per_term_bias=True)
        assert bias_set.bias_vectors.shape == (3, 2)

    def test_disjoint_query_zero_row_trips_clamp_error(self, stub):
        s = stub.embed(["alpha", "beta"])
        bias_set = build_bias_set([Query(label="q", terms=("zeta",))], s, stub)
        assert np.count_nonzero(bias_set.bias_vectors) == 0
        with pytest.raises(ClampedBiasZero):
            rank(s, bias_set.bias_vectors, config=RankConfig())

    def test_append_sentiment_row(self, stub):
        s = stub.embed(["alpha", "beta"])
        bias_set = build_bias_set([Query(label="q", terms=("alpha",))], s, stub)
        bias_set.append_row(np.array([0.9, 0.1]), "sentiment-classifier")
        assert bias_set.bias_vectors.shape == (2, 2)
        assert bias_set.provenance[-1] == "sentiment-classifier"
