import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from essrank.errors import (
    EmptyInput,
    MaskTokenError,
    ProviderResponseError,
    ProviderTransportError,
    TokenCollision,
)
from essrank.numerics import cosine_similarity
from essrank.providers import (
    CachedEmbeddings,
    HttpProvider,
    ProviderConfig,
    StubProvider,
    make_provider,
)


class TestStubEmbeddings:
    def test_same_text_twice_identical(self, stub):
        out = stub.embed(["a b", "a b"])
        assert np.array_equal(out[0], out[1])

    def test_order_free_bag_of_tokens(self, stub):
        out = stub.embed(["a b", "b a"])
        assert np.array_equal(out[0], out[1])

    def test_pure_function_of_text_and_seed(self):
        first = StubProvider(seed=1).embed(["gamma delta"])
        # A different call history must not change the vector.
        other = StubProvider(seed=1)
        other.embed(["unrelated words here"])
        second = other.embed(["gamma delta"])
        assert np.array_equal(first[0], second[0])

    def test_seed_changes_directions(self):
        a = StubProvider(seed=1).embed(["alpha"])
        b = StubProvider(seed=2).embed(["alpha"])
        assert not np.array_equal(a[0], b[0])

    def test_models_use_disjoint_spaces(self, stub):
        sym = stub.embed(["alpha"], model="symmetric")
        asym = stub.embed(["alpha"], model="asymmetric")
        assert not np.array_equal(sym[0], asym[0])

    def test_bag_of_tokens_cosine_identity(self, stub):
        s1, s2 = "alpha beta gamma", "alpha beta delta"
        out = stub.embed([s1, s2])
        expected = 2.0 / math.sqrt(3 * 3)
        assert cosine_similarity(out[:1], out[1:])[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_raw_norm_is_sqrt_token_count(self, raw_stub):
        out = raw_stub.embed(["one two three four", "one one"])
        assert np.linalg.norm(out[0]) == pytest.approx(math.sqrt(4), abs=1e-12)
        assert np.linalg.norm(out[1]) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_normalized_mode_unit_norm(self, unit_stub):
        out = unit_stub.embed(["one two three"])
        assert np.linalg.norm(out[0]) == pytest.approx(1.0, abs=1e-12)

    def test_empty_batch_rejected(self, stub):
        with pytest.raises(EmptyInput):
            stub.embed([])

    def test_collision_detected(self):
        tiny = StubProvider(seed=0, dim=1)
        with pytest.raises(TokenCollision):
            tiny.embed(["alpha beta"])


class TestStubSentiment:
    def test_keyword_rule(self, stub):
        scores = stub.sentiment(["this is bad", "pretty good stuff", "neutral words"])
        assert scores[0].negative == 0.9
        assert scores[1].positive == 0.9
        assert scores[2].positive == 0.5

    def test_empty_text_uninformative_prior(self, stub):
        score = stub.sentiment([""])[0]
        assert (score.positive, score.negative) == (0.5, 0.5)

    def test_batch_order_preserved(self, stub):
        texts = ["bad", "good", "bad"]
        scores = stub.sentiment(texts)
        assert [s.negative for s in scores] == [0.9, 0.1, 0.9]


class TestStubFillMask:
    def test_scripted_lookup(self):
        provider = StubProvider(mask_table={"the [MASK] drains": ["battery", "charger"]})
        predictions = provider.fill_mask("the [MASK] drains", top_k=2)
        assert [p[0] for p in predictions] == ["battery", "charger"]
        assert predictions[0][1] > predictions[1][1]

    def test_no_mask_errors(self, stub):
        with pytest.raises(MaskTokenError):
            stub.fill_mask("no mask here")

    def test_two_masks_error(self, stub):
        with pytest.raises(MaskTokenError):
            stub.fill_mask("[MASK] and [MASK]")

    def test_top_k_one(self):
        provider = StubProvider(mask_table={"a [MASK]": ["x", "y", "z"]})
        assert len(provider.fill_mask("a [MASK]", top_k=1)) == 1


class TestStubAnnotate:
    def test_capitalized_run_is_entity(self, stub):
        annotation = stub.annotate(["We called Acme Support today"])[0]
        labels = {t.text: t.entity_label for t in annotation.tokens}
        assert labels["Acme"] == "ORG" and labels["Support"] == "ORG"

    def test_empty_text(self, stub):
        annotation = stub.annotate([""])[0]
        assert annotation.tokens == [] and annotation.noun_chunks == []

    def test_token_count_preserved(self, stub):
        text = "the quick brown fox jumps"
        annotation = stub.annotate([text])[0]
        assert len(annotation.tokens) == len(text.split())


class TestCache:
    def test_round_trip_zero_remote_calls(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        inner = StubProvider(seed=0)
        cached = CachedEmbeddings(inner, path)
        first = cached.embed(["alpha beta", "gamma"])
        assert inner.calls["embed"] == 1

        fresh_inner = StubProvider(seed=0)
        reopened = CachedEmbeddings(fresh_inner, path)  # simulated restart
        second = reopened.embed(["alpha beta", "gamma"])
        assert fresh_inner.calls["embed"] == 0
        assert np.array_equal(first, second)

    def test_partial_miss_fetches_only_missing(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        inner = StubProvider(seed=0)
        cached = CachedEmbeddings(inner, path)
        cached.embed(["alpha"])
        cached.embed(["alpha", "beta"])
        records = [json.loads(x) for x in path.read_text().splitlines()]
        assert len(records) == 2  # write-once per key

    def test_keying_is_model_aware(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        cached = CachedEmbeddings(StubProvider(seed=0), path)
        sym = cached.embed(["alpha"], model="symmetric")
        asym = cached.embed(["alpha"], model="asymmetric")
        assert not np.array_equal(sym, asym)

    def test_passthrough_non_embedding_calls(self, tmp_path):
        cached = CachedEmbeddings(StubProvider(seed=0), tmp_path / "c.jsonl")
        assert cached.sentiment(["bad"])[0].negative == 0.9
        assert cached.annotate(["x"])[0].tokens[0].text == "x"


class _WireHandler(BaseHTTPRequestHandler):
    drift = False

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.path == "/v1/embed":
            dim = 3 if not _WireHandler.drift else 4
            body = {"dim": dim, "vectors": [[1.0] * dim for _ in payload["texts"]]}
        elif self.path == "/v1/sentiment":
            body = {"scores": [{"positive": 0.7, "negative": 0.3} for _ in payload["texts"]]}
        elif self.path == "/v1/fill-mask":
            body = {"predictions": [{"token": "word", "score": 0.5}]}
        elif self.path == "/v1/annotate":
            body = {
                "annotations": [
                    {
                        "tokens": [
                            {"text": t, "lemma": t, "pos": "NOUN", "dep": "dep", "is_stop": False, "ent": ""}
                            for t in text.split()
                        ],
                        "noun_chunks": [],
                    }
                    for text in payload["texts"]
                ]
            }
        else:
            self.send_response(404)
            self.end_headers()
            return
        raw = json.dumps(body).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, *args):
        pass


@pytest.fixture
def wire_server():
    _WireHandler.drift = False
    server = HTTPServer(("127.0.0.1", 0), _WireHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestHttpProvider:
    def test_embed_round_trip(self, wire_server):
        provider = HttpProvider(wire_server)
        out = provider.embed(["a", "b"])
        assert out.shape == (2, 3)

    def test_dimension_drift_is_fatal(self, wire_server):
        provider = HttpProvider(wire_server)
        provider.embed(["a"])
        _WireHandler.drift = True
        with pytest.raises(ProviderResponseError, match="drift"):
            provider.embed(["a"])

    def test_sentiment_and_annotate(self, wire_server):
        provider = HttpProvider(wire_server)
        assert provider.sentiment(["x"])[0].positive == 0.7
        assert provider.annotate(["two words"])[0].tokens[1].text == "words"

    def test_transport_error_after_retries(self, monkeypatch):
        provider = HttpProvider("http://127.0.0.1:9", timeout_ms=200)
        monkeypatch.setattr(HttpProvider, "BACKOFF_S", 0.01)
        with pytest.raises(ProviderTransportError):
            provider.embed(["a"])

    def test_mask_validated_before_transport(self):
        provider = HttpProvider("http://127.0.0.1:9")
        with pytest.raises(MaskTokenError):
            provider.fill_mask("no mask")


class TestProviderConfigAndFactory:
    def test_http_requires_base_url(self):
        with pytest.raises(ProviderResponseError):
            ProviderConfig(kind="http")

    def test_make_provider_stub(self):
        assert isinstance(make_provider("stub"), StubProvider)

    def test_make_provider_url(self):
        assert isinstance(make_provider("http://localhost:9"), HttpProvider)

    def test_make_provider_cached(self, tmp_path):
        provider = make_provider("stub", cache_path=tmp_path / "c.jsonl")
        assert isinstance(provider, CachedEmbeddings)

    def test_make_provider_garbage(self):
        with pytest.raises(ProviderResponseError):
            make_provider("ftp://nope")

    def test_provider_from_config(self, tmp_path):
        from essrank.providers import provider_from_config

        stub = provider_from_config(ProviderConfig(kind="stub", seed=3, dim=128))
        assert isinstance(stub, StubProvider) and stub.dim == 128
        cached = provider_from_config(
            ProviderConfig(kind="http", base_url="http://localhost:1", cache_path=str(tmp_path / "c.jsonl"))
        )
        assert isinstance(cached, CachedEmbeddings)
        assert isinstance(cached.inner, HttpProvider)
