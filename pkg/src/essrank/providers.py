"""Model-service abstraction: embeddings, sentiment, mask-fill, annotation.

Two implementations share one interface: an in-process deterministic stub and
an HTTP client speaking the sidecar wire protocol:

    POST /v1/embed     {"model": "symmetric"|"asymmetric", "texts": [...]}
                       -> {"dim": d, "vectors": [[...], ...]}
    POST /v1/sentiment {"texts": [...]}
                       -> {"scores": [{"positive": p, "negative": q}, ...]}
    POST /v1/fill-mask {"text": "...", "top_k": k}
                       -> {"predictions": [{"token": t, "score": s}, ...]}
    POST /v1/annotate  {"texts": [...]}
                       -> {"annotations": [{"tokens": [...], "noun_chunks": [[s, e], ...]}]}

The stub embedder maps every token occurrence to a one-hot basis direction at
index sha256(model|seed|token#occurrence) mod dim (64Ki default), and a text
embeds as the sum of its token directions. Consequences used by tests:

  * cosine(s1, s2) = |tokens(s1) & tokens(s2)| / sqrt(|tokens(s1)|*|tokens(s2)|)
    (multiset intersection), exactly;
  * in raw mode the embedding norm is exactly sqrt(token count), a monotone
    information-content proxy;
  * embeddings are a pure function of (text, model, seed).

Distinct tokens hashing to the same index would silently break the first two
properties, so the stub tracks assignments and raises TokenCollision instead.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import requests

from .errors import (
    EmptyInput,
    MaskTokenError,
    ProviderResponseError,
    ProviderTransportError,
    TokenCollision,
)
from .sentiment import SentimentScore
from .stopwords import STOPWORDS
from .textproc import AnnotatedToken, normalize_phrase

MASK_TOKEN = "[MASK]"

EMBEDDING_MODELS = ("symmetric", "asymmetric")

__all__ = [
    "Annotation",
    "ProviderConfig",
    "Provider",
    "StubProvider",
    "HttpProvider",
    "CachedEmbeddings",
    "make_provider",
    "MASK_TOKEN",
]


@dataclass
class Annotation:
    tokens: list[AnnotatedToken]
    noun_chunks: list[tuple[int, int]]


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "stub"  # stub | http
    base_url: Optional[str] = None
    timeout_ms: int = 10000
    max_in_flight: int = 4
    cache_path: Optional[str] = None
    seed: int = 0
    dim: int = 65536
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in ("stub", "http"):
            raise ProviderResponseError(f"unknown provider kind {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ProviderResponseError("http provider requires base_url")
        if self.timeout_ms <= 0:
            raise ProviderResponseError("timeout_ms must be > 0")


class Provider:
    """Interface shared by the stub and the HTTP client."""

    def embed(self, texts: list[str], model: str = "symmetric") -> np.ndarray:
        raise NotImplementedError

    def sentiment(self, texts: list[str]) -> list[SentimentScore]:
        raise NotImplementedError

    def fill_mask(self, text: str, top_k: int = 5) -> list[tuple[str, float]]:
        raise NotImplementedError

    def annotate(self, texts: list[str]) -> list[Annotation]:
        raise NotImplementedError

    def annotate_records(self, records) -> None:
        """Fill tokens and noun-chunk spans on sentence records, in place."""
        annotations = self.annotate([r.text for r in records])
        for record, annotation in zip(records, annotations):
            record.tokens = annotation.tokens
            record.noun_chunks = annotation.noun_chunks

    @staticmethod
    def _check_embed_args(texts, model):
        if not texts:
            raise EmptyInput("embed() needs at least one text")
        if model not in EMBEDDING_MODELS:
            raise ProviderResponseError(f"unknown embedding model {model!r}")


# ---------------------------------------------------------------------------
# Deterministic stub
# ---------------------------------------------------------------------------

_STUB_WORD_RE = re.compile(r"[A-Za-z0-9']+|[^\sA-Za-z0-9]")

_POSITIVE_WORDS = frozenset(
    "good great excellent amazing love loved lovely nice better best happy "
    "reliable wonderful fantastic superb pleasant smooth durable".split()
)
_NEGATIVE_WORDS = frozenset(
    "bad poor terrible awful worse worst broken slow hate hated faulty "
    "defective disappointing unhappy noisy flimsy unreliable laggy".split()
)

_AUX_WORDS = frozenset(
    "is was are were am be been being should could would can may might must "
    "shall will has have had do does did".split()
)
_DETERMINERS = frozenset("the a an this that these those each every some any".split())
_PRONOUNS = frozenset("i you he she it we they me him her us them".split())
_CCONJ = frozenset("and or but nor yet".split())
_ADPOSITIONS = frozenset(
    "in on at of for with to from by about as into over under after before".split()
)
_ADJ_WORDS = frozenset(
    "good bad great poor excellent terrible awful amazing nice slow fast "
    "cheap expensive reliable faulty broken worse better best worst red blue "
    "green old new big small high low noisy quiet durable flimsy long short "
    "heavy light happy unhappy defective disappointing unreliable laggy "
    "wonderful fantastic superb pleasant smooth sturdy weak strong".split()
)
_ADV_WORDS = frozenset("very quite too rather almost never always often again".split())
_VERB_WORDS = frozenset(
    "trend react perform work fail drain charge break crash love hate like "
    "stop go run return leave make receive explain improve ship arrive feel "
    "look seem get keep become buy sell praise complain overheat lag".split()
)
_MONTHS = frozenset(
    "january february march april may june july august september october "
    "november december monday tuesday wednesday thursday friday saturday "
    "sunday".split()
)


def _naive_lemma(token: str) -> str:
    t = token.lower()
    if t.endswith("'s"):
        t = t[:-2]
    for suffix in ("ing", "ed"):
        if t.endswith(suffix) and len(t) > len(suffix) + 2:
            stem = t[: -len(suffix)]
            if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiou":
                stem = stem[:-1]
            return stem
    if t.endswith("ies") and len(t) > 4:
        return t[:-3] + "y"
    if t.endswith("s") and not t.endswith("ss") and len(t) > 3:
        return t[:-1]
    return t


def _is_word(token: str) -> bool:
    return bool(re.match(r"[A-Za-z0-9']", token))


class StubProvider(Provider):
    """Deterministic in-process provider; no models, no network.

    Sentiment is a keyword rule (whichever polarity lexicon matches more
    tokens gets probability 0.9; ties and empty text get 0.5/0.5).
    Fill-mask is an exact lookup in a scripted table keyed by the masked
    text. Annotation uses closed-class word lists plus suffix heuristics
    for POS, and capitalized multi-token runs / a scripted table / date
    words for NER.
    """

    def __init__(
        self,
        seed: int = 0,
        dim: int = 65536,
        normalize: bool = False,
        mask_table: Optional[dict] = None,
        entity_table: Optional[dict[str, str]] = None,
    ):
        self.seed = seed
        self.dim = dim
        self.normalize = normalize
        self.mask_table = dict(mask_table or {})
        self.entity_table = {normalize_phrase(k): v for k, v in (entity_table or {}).items()}
        self.calls: dict[str, int] = {"embed": 0, "sentiment": 0, "fill_mask": 0, "annotate": 0}
        self._registries: dict[str, dict[int, str]] = {m: {} for m in EMBEDDING_MODELS}

    # -- embeddings --------------------------------------------------------

    def _token_index(self, model: str, token_key: str) -> int:
        digest = hashlib.sha256(f"{model}|{self.seed}|{token_key}".encode()).digest()
        idx = int.from_bytes(digest[:8], "big") % self.dim
        registry = self._registries[model]
        owner = registry.setdefault(idx, token_key)
        if owner != token_key:
            raise TokenCollision(
                f"stub tokens {owner!r} and {token_key!r} share basis index {idx} "
                f"(model={model}, dim={self.dim}); raise dim or change seed"
            )
        return idx

    def embed(self, texts: list[str], model: str = "symmetric") -> np.ndarray:
        self._check_embed_args(texts, model)
        self.calls["embed"] += 1
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            occurrences: dict[str, int] = {}
            for token in re.findall(r"[a-z0-9']+", text.lower()):
                occ = occurrences.get(token, 0)
                occurrences[token] = occ + 1
                out[row, self._token_index(model, f"{token}#{occ}")] += 1.0
            if self.normalize:
                norm = np.linalg.norm(out[row])
                if norm > 0:
                    out[row] /= norm
        return out

    # -- sentiment ----------------------------------------------------------

    def sentiment(self, texts: list[str]) -> list[SentimentScore]:
        if not texts:
            raise EmptyInput("sentiment() needs at least one text")
        self.calls["sentiment"] += 1
        scores = []
        for text in texts:
            tokens = re.findall(r"[a-z']+", text.lower())
            pos = sum(t in _POSITIVE_WORDS for t in tokens)
            neg = sum(t in _NEGATIVE_WORDS for t in tokens)
            if pos > neg:
                scores.append(SentimentScore(positive=0.9, negative=0.1))
            elif neg > pos:
                scores.append(SentimentScore(positive=0.1, negative=0.9))
            else:
                scores.append(SentimentScore(positive=0.5, negative=0.5))
        return scores

    # -- fill mask -----------------------------------------------------------

    def fill_mask(self, text: str, top_k: int = 5) -> list[tuple[str, float]]:
        count = text.count(MASK_TOKEN)
        if count != 1:
            raise MaskTokenError(f"expected exactly one {MASK_TOKEN}, found {count}")
        self.calls["fill_mask"] += 1
        entry = self.mask_table.get(text, [])
        predictions = []
        for i, item in enumerate(entry):
            if isinstance(item, str):
                predictions.append((item, 1.0 / (i + 1)))
            else:
                predictions.append((str(item[0]), float(item[1])))
        predictions.sort(key=lambda p: -p[1])
        return predictions[:top_k]

    # -- annotation -----------------------------------------------------------

    def _pos_tag(self, token: str) -> tuple[str, str]:
        """(pos, dep) for one token."""
        t = token.lower()
        if not _is_word(token):
            return "PUNCT", "punct"
        if t in ("not", "n't"):
            return "PART", "neg"
        if t == "never":
            return "ADV", "neg"
        if t in _AUX_WORDS:
            return "AUX", "aux"
        if t in _DETERMINERS:
            return "DET", "det"
        if t in _PRONOUNS:
            return "PRON", "dep"
        if t in _CCONJ:
            return "CCONJ", "cc"
        if t in _ADPOSITIONS:
            return "ADP", "prep"
        if t.replace(",", "").replace(".", "").isdigit():
            return "NUM", "nummod"
        if t in _ADJ_WORDS:
            return "ADJ", "amod"
        if t in _ADV_WORDS or (t.endswith("ly") and len(t) > 3):
            return "ADV", "advmod"
        if t in _VERB_WORDS or _naive_lemma(t) in _VERB_WORDS:
            return "VERB", "dep"
        if t.endswith("ing") or t.endswith("ed"):
            return "VERB", "dep"
        if token[:1].isupper():
            return "PROPN", "dep"
        return "NOUN", "dep"

    def _entity_labels(self, words: list[str], text: str) -> list[Optional[str]]:
        labels: list[Optional[str]] = [None] * len(words)
        whole = self.entity_table.get(normalize_phrase(text))
        for i, word in enumerate(words):
            if not _is_word(word):
                continue
            label = whole or self.entity_table.get(word.lower())
            if label is None:
                if word.lower() in _MONTHS or (word.isdigit() and len(word) == 4):
                    label = "DATE"
            labels[i] = label
        # Capitalized multi-token runs read as organization mentions.
        i = 0
        while i < len(words):
            if _is_word(words[i]) and words[i][:1].isupper():
                j = i
                while j + 1 < len(words) and _is_word(words[j + 1]) and words[j + 1][:1].isupper():
                    j += 1
                if j > i:
                    for k in range(i, j + 1):
                        labels[k] = labels[k] or "ORG"
                i = j + 1
            else:
                i += 1
        return labels

    def annotate(self, texts: list[str]) -> list[Annotation]:
        self.calls["annotate"] += 1
        annotations = []
        for text in texts:
            words = _STUB_WORD_RE.findall(text)
            entity_labels = self._entity_labels(words, text)
            tokens = []
            for word, label in zip(words, entity_labels):
                pos, dep = self._pos_tag(word)
                tokens.append(
                    AnnotatedToken(
                        text=word,
                        lemma=_naive_lemma(word),
                        pos=pos,
                        dep=dep,
                        is_stopword=word.lower() in STOPWORDS,
                        entity_label=label,
                    )
                )
            from .textproc import derive_noun_chunk_spans

            annotations.append(Annotation(tokens=tokens, noun_chunks=derive_noun_chunk_spans(tokens)))
        return annotations


# ---------------------------------------------------------------------------
# HTTP client
# ---------------------------------------------------------------------------


class HttpProvider(Provider):
    """Client for a sidecar implementing the wire protocol.

    Transport failures retry up to 3 attempts with exponential backoff;
    responses with error status are terminal. Embedding dimension drift
    within a run is a fatal error.
    """

    RETRIES = 3
    BACKOFF_S = 0.2

    def __init__(self, base_url: str, timeout_ms: int = 10000, max_in_flight: int = 4):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_ms / 1000.0
        self._session = requests.Session()
        self._in_flight = threading.Semaphore(max_in_flight)
        self._dims: dict[str, int] = {}

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_exc = None
        for attempt in range(self.RETRIES):
            try:
                with self._in_flight:
                    response = self._session.post(url, json=payload, timeout=self.timeout_s)
                break
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                time.sleep(self.BACKOFF_S * (2**attempt))
        else:
            raise ProviderTransportError(f"POST {url} failed after {self.RETRIES} attempts: {last_exc}")
        if response.status_code != 200:
            raise ProviderResponseError(f"POST {url} -> HTTP {response.status_code}: {response.text[:500]}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderResponseError(f"POST {url}: response is not JSON") from exc

    def embed(self, texts: list[str], model: str = "symmetric") -> np.ndarray:
        self._check_embed_args(texts, model)
        body = self._post("/v1/embed", {"model": model, "texts": list(texts)})
        vectors = body.get("vectors")
        dim = body.get("dim")
        if vectors is None or dim is None or len(vectors) != len(texts):
            raise ProviderResponseError("embed response missing vectors or dim, or wrong count")
        known = self._dims.setdefault(model, int(dim))
        if known != int(dim):
            raise ProviderResponseError(
                f"embedding dimension drifted for model {model!r}: {known} -> {dim}"
            )
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != int(dim):
            raise ProviderResponseError("embed response vectors do not match declared dim")
        return matrix

    def sentiment(self, texts: list[str]) -> list[SentimentScore]:
        if not texts:
            raise EmptyInput("sentiment() needs at least one text")
        body = self._post("/v1/sentiment", {"texts": list(texts)})
        raw = body.get("scores")
        if raw is None or len(raw) != len(texts):
            raise ProviderResponseError("sentiment response score count mismatch")
        scores = []
        for item in raw:
            score = SentimentScore(positive=float(item["positive"]), negative=float(item["negative"]))
            if not 0.99 <= score.positive + score.negative <= 1.01:
                raise ProviderResponseError(
                    f"sentiment probabilities do not sum to 1: {score.positive} + {score.negative}"
                )
            scores.append(score)
        return scores

    def fill_mask(self, text: str, top_k: int = 5) -> list[tuple[str, float]]:
        count = text.count(MASK_TOKEN)
        if count != 1:
            raise MaskTokenError(f"expected exactly one {MASK_TOKEN}, found {count}")
        body = self._post("/v1/fill-mask", {"text": text, "top_k": top_k})
        predictions = body.get("predictions")
        if predictions is None:
            raise ProviderResponseError("fill-mask response missing predictions")
        return [(str(p["token"]), float(p["score"])) for p in predictions][:top_k]

    def annotate(self, texts: list[str]) -> list[Annotation]:
        body = self._post("/v1/annotate", {"texts": list(texts)})
        raw = body.get("annotations")
        if raw is None or len(raw) != len(texts):
            raise ProviderResponseError("annotate response count mismatch")
        annotations = []
        for item in raw:
            tokens = [
                AnnotatedToken(
                    text=t["text"],
                    lemma=t.get("lemma", t["text"].lower()),
                    pos=t.get("pos", "X"),
                    dep=t.get("dep", "dep"),
                    is_stopword=bool(t.get("is_stop", False)),
                    entity_label=t.get("ent") or None,
                )
                for t in item.get("tokens", [])
            ]
            chunks = [(int(s), int(e)) for s, e in item.get("noun_chunks", [])]
            annotations.append(Annotation(tokens=tokens, noun_chunks=chunks))
        return annotations


# ---------------------------------------------------------------------------
# Embedding cache
# ---------------------------------------------------------------------------


class CachedEmbeddings(Provider):
    """Persistent exact-text embedding cache wrapping another provider.

    JSON-lines records {model, text_sha256, dim, vector}; keys are written
    once and hits return bit-identical vectors (float64 survives the JSON
    round-trip exactly). Non-embedding calls pass through.
    """

    def __init__(self, inner: Provider, path):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()
        self._store: dict[tuple[str, str], np.ndarray] = {}
        self._dims: dict[str, int] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                vector = np.asarray(record["vector"], dtype=np.float64)
                self._store[(record["model"], record["text_sha256"])] = vector
                self._dims.setdefault(record["model"], int(record["dim"]))

    @staticmethod
    def _key(model: str, text: str) -> tuple[str, str]:
        return model, hashlib.sha256(text.encode("utf-8")).hexdigest()

    def embed(self, texts: list[str], model: str = "symmetric") -> np.ndarray:
        self._check_embed_args(texts, model)
        keys = [self._key(model, t) for t in texts]
        missing_positions = [i for i, key in enumerate(keys) if key not in self._store]
        if missing_positions:
            fetched = self.inner.embed([texts[i] for i in missing_positions], model)
            with self._lock, open(self.path, "a", encoding="utf-8") as fh:
                for row, i in enumerate(missing_positions):
                    key = keys[i]
                    if key in self._store:  # write-once per key
                        continue
                    vector = np.array(fetched[row], dtype=np.float64)
                    self._store[key] = vector
                    self._dims.setdefault(model, vector.shape[0])
                    fh.write(
                        json.dumps(
                            {
                                "model": model,
                                "text_sha256": key[1],
                                "dim": vector.shape[0],
                                "vector": vector.tolist(),
                            }
                        )
                        + "\n"
                    )
        rows = [self._store[key] for key in keys]
        dim = self._dims.get(model, rows[0].shape[0])
        if any(r.shape[0] != dim for r in rows):
            raise ProviderResponseError(f"cached vectors for model {model!r} have mixed dimensions")
        return np.vstack(rows)

    def sentiment(self, texts):
        return self.inner.sentiment(texts)

    def fill_mask(self, text, top_k=5):
        return self.inner.fill_mask(text, top_k)

    def annotate(self, texts):
        return self.inner.annotate(texts)


def make_provider(spec: str = "stub", cache_path=None, seed: int = 0, **stub_kwargs) -> Provider:
    """Build a provider from a CLI-style spec: "stub" or a base URL."""
    if spec == "stub":
        provider: Provider = StubProvider(seed=seed, **stub_kwargs)
    elif spec.startswith("http://") or spec.startswith("https://"):
        provider = HttpProvider(spec)
    else:
        raise ProviderResponseError(f"provider must be 'stub' or an http(s) URL, got {spec!r}")
    if cache_path:
        provider = CachedEmbeddings(provider, cache_path)
    return provider


def provider_from_config(config: ProviderConfig) -> Provider:
    if config.kind == "stub":
        provider: Provider = StubProvider(seed=config.seed, dim=config.dim, normalize=config.normalize)
    else:
        provider = HttpProvider(config.base_url, config.timeout_ms, config.max_in_flight)
    if config.cache_path:
        provider = CachedEmbeddings(provider, config.cache_path)
    return provider
