"""Model registry: resolves the five capabilities behind the wire protocol.

Two backends:

* ``hash``: deterministic, dependency-free stand-ins (seeded-hash token
  embeddings, lexicon sentiment, context-frequency mask-fill). No downloads,
  stable across restarts; intended for development, CI, and contract tests.
* ``hf``: real checkpoints via sentence-transformers / transformers. Names
  are configuration (env vars), defaults pinned in models.lock. Loading is
  lazy and failures abort startup rather than silently degrading.

Annotation (POS/dependency/NER/noun chunks) is rule-based in both backends;
a model-backed pipeline can replace it where one is installed.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MASK_TOKEN = "[MASK]"

# Pinned defaults; see models.lock.
DEFAULT_SYMMETRIC = "sentence-transformers/paraphrase-MiniLM-L6-v2"
DEFAULT_ASYMMETRIC = "sentence-transformers/msmarco-MiniLM-L-6-v3"
DEFAULT_SENTIMENT = "distilbert-base-uncased-finetuned-sst-2-english"
DEFAULT_MASK = "distilbert-base-uncased"

_WORD_RE = re.compile(r"[A-Za-z0-9']+|[^\sA-Za-z0-9]")
_TOKEN_RE = re.compile(r"[a-z0-9']+")


@dataclass
class SidecarConfig:
    backend: str = "hash"
    symmetric_model: str = DEFAULT_SYMMETRIC
    asymmetric_model: str = DEFAULT_ASYMMETRIC
    sentiment_model: str = DEFAULT_SENTIMENT
    mask_model: str = DEFAULT_MASK
    max_batch: int = 256
    hash_dim: int = 384
    cache_dir: Optional[str] = None
    port: int = 8720

    @classmethod
    def from_env(cls) -> "SidecarConfig":
        env = os.environ
        return cls(
            backend=env.get("SIDECAR_BACKEND", "hash"),
            symmetric_model=env.get("SIDECAR_SYMMETRIC_MODEL", DEFAULT_SYMMETRIC),
            asymmetric_model=env.get("SIDECAR_ASYMMETRIC_MODEL", DEFAULT_ASYMMETRIC),
            sentiment_model=env.get("SIDECAR_SENTIMENT_MODEL", DEFAULT_SENTIMENT),
            mask_model=env.get("SIDECAR_MASK_MODEL", DEFAULT_MASK),
            max_batch=int(env.get("SIDECAR_MAX_BATCH", "256")),
            hash_dim=int(env.get("SIDECAR_HASH_DIM", "384")),
            cache_dir=env.get("SIDECAR_CACHE_DIR"),
            port=int(env.get("SIDECAR_PORT", "8720")),
        )


class BackendError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Deterministic hash backend
# ---------------------------------------------------------------------------

_POSITIVE = frozenset(
    "good great excellent amazing love loved lovely nice better best happy "
    "reliable wonderful fantastic superb pleasant smooth durable".split()
)
_NEGATIVE = frozenset(
    "bad poor terrible awful worse worst broken slow hate hated faulty "
    "defective disappointing unhappy noisy flimsy unreliable laggy".split()
)


class HashBackend:
    """Seeded-hash stand-ins with the same wire semantics as real models."""

    def __init__(self, config: SidecarConfig):
        self.dim = config.hash_dim
        self._directions: dict[tuple[str, str], np.ndarray] = {}

    def _token_direction(self, space: str, token: str) -> np.ndarray:
        key = (space, token)
        cached = self._directions.get(key)
        if cached is None:
            digest = hashlib.sha256(f"{space}|{token}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
            vector = rng.standard_normal(self.dim)
            cached = vector / np.linalg.norm(vector)
            self._directions[key] = cached
        return cached

    def embed(self, model: str, texts: list[str]) -> tuple[int, list[list[float]]]:
        vectors = []
        for text in texts:
            tokens = _TOKEN_RE.findall(text.lower())
            if tokens:
                total = np.sum([self._token_direction(model, t) for t in tokens], axis=0)
                norm = np.linalg.norm(total)
                vector = total / norm if norm > 0 else total
            else:
                vector = np.zeros(self.dim)
            vectors.append([float(x) for x in vector])
        return self.dim, vectors

    def dims(self) -> dict[str, int]:
        return {"symmetric": self.dim, "asymmetric": self.dim}

    def sentiment(self, texts: list[str]) -> list[dict]:
        scores = []
        for text in texts:
            tokens = _TOKEN_RE.findall(text.lower())
            pos = sum(t in _POSITIVE for t in tokens)
            neg = sum(t in _NEGATIVE for t in tokens)
            positive = (1.0 + pos) / (2.0 + pos + neg)
            scores.append({"positive": positive, "negative": 1.0 - positive})
        return scores

    def fill_mask(self, text: str, top_k: int) -> list[dict]:
        context = [t for t in _TOKEN_RE.findall(text.lower()) if t != "mask"]
        counts: dict[str, int] = {}
        for token in context:
            counts[token] = counts.get(token, 0) + 1
        ranked = sorted(counts, key=lambda t: (-counts[t], t))[:top_k]
        total = sum(1.0 / (i + 1) for i in range(len(ranked))) or 1.0
        return [
            {"token": token, "score": (1.0 / (i + 1)) / total}
            for i, token in enumerate(ranked)
        ]


# ---------------------------------------------------------------------------
# Real-model backend (optional heavy deps)
# ---------------------------------------------------------------------------


class HfBackend:
    """sentence-transformers encoders plus transformers pipelines.

    Handles load lazily on first use; inference per handle is serialized, the
    runtimes are not guaranteed thread-safe.
    """

    def __init__(self, config: SidecarConfig):
        self.config = config
        self._lock = threading.Lock()
        self._encoders: dict[str, object] = {}
        self._sentiment = None
        self._fill_mask = None
        self._dims: dict[str, int] = {}

    def _encoder(self, model: str):
        with self._lock:
            handle = self._encoders.get(model)
            if handle is None:
                try:
                    from sentence_transformers import SentenceTransformer
                except ImportError as exc:
                    raise BackendError(
                        "backend=hf needs sentence-transformers (pip install scoring-sidecar[models])"
                    ) from exc
                name = (
                    self.config.symmetric_model if model == "symmetric" else self.config.asymmetric_model
                )
                handle = SentenceTransformer(name, cache_folder=self.config.cache_dir)
                self._encoders[model] = handle
                self._dims[model] = int(handle.get_sentence_embedding_dimension())
            return handle

    def embed(self, model: str, texts: list[str]) -> tuple[int, list[list[float]]]:
        encoder = self._encoder(model)
        with self._lock:
            matrix = encoder.encode(texts, convert_to_numpy=True, show_progress_bar=False)
        return self._dims[model], [[float(x) for x in row] for row in matrix]

    def dims(self) -> dict[str, int]:
        return dict(self._dims)

    def sentiment(self, texts: list[str]) -> list[dict]:
        with self._lock:
            if self._sentiment is None:
                try:
                    from transformers import pipeline
                except ImportError as exc:
                    raise BackendError("backend=hf needs transformers") from exc
                self._sentiment = pipeline(
                    "text-classification", model=self.config.sentiment_model, top_k=None
                )
            raw = self._sentiment(list(texts))
        scores = []
        for entry in raw:
            by_label = {item["label"].lower(): float(item["score"]) for item in entry}
            positive = by_label.get("positive", by_label.get("label_1", 0.5))
            negative = by_label.get("negative", by_label.get("label_0", 1.0 - positive))
            scores.append({"positive": positive, "negative": negative})
        return scores

    def fill_mask(self, text: str, top_k: int) -> list[dict]:
        with self._lock:
            if self._fill_mask is None:
                try:
                    from transformers import pipeline
                except ImportError as exc:
                    raise BackendError("backend=hf needs transformers") from exc
                self._fill_mask = pipeline("fill-mask", model=self.config.mask_model)
            mask_token = self._fill_mask.tokenizer.mask_token
            raw = self._fill_mask(text.replace(MASK_TOKEN, mask_token), top_k=top_k)
        return [{"token": item["token_str"].strip(), "score": float(item["score"])} for item in raw]


# ---------------------------------------------------------------------------
# Rule-based annotation (shared by both backends)
# ---------------------------------------------------------------------------

_AUX = frozenset(
    "is was are were am be been being should could would can may might must "
    "shall will has have had do does did".split()
)
_DET = frozenset("the a an this that these those each every some any".split())
_PRON = frozenset("i you he she it we they me him her us them".split())
_CCONJ = frozenset("and or but nor yet".split())
_ADP = frozenset("in on at of for with to from by about as into over under after before".split())
_ADJ = frozenset(
    "good bad great poor excellent terrible awful amazing nice slow fast cheap "
    "expensive reliable faulty broken worse better best worst red blue green old "
    "new big small high low noisy quiet durable flimsy long short heavy light "
    "happy unhappy defective disappointing unreliable laggy wonderful fantastic "
    "superb pleasant smooth sturdy weak strong clear".split()
)
_ADV = frozenset("very quite too rather almost never always often again".split())
_VERB = frozenset(
    "trend react perform work fail drain charge break crash love hate like stop "
    "go run return leave make receive explain improve ship arrive feel look seem "
    "get keep become buy sell praise complain overheat lag trending trended "
    "drains drained failed failing works worked breaks broke crashed loves hates "
    "stopped went ran returned left made received explained improved shipped "
    "arrived feels felt looks looked seems seemed got kept became bought sold "
    "praised complained overheats lags lagged mentions mentioned includes "
    "included took takes sounds sounded focuses focused cracked".split()
)
_STOP = _AUX | _DET | _PRON | _CCONJ | _ADP | frozenset("not no nor so".split())
_MONTHS = frozenset(
    "january february march april may june july august september october "
    "november december monday tuesday wednesday thursday friday saturday sunday".split()
)

_NOUNISH = {"NOUN", "PROPN"}
_CHUNKABLE = {"DET", "ADJ", "NOUN", "PROPN", "NUM"}


def _pos_of(token: str) -> tuple[str, str]:
    t = token.lower()
    if not re.match(r"[A-Za-z0-9']", token):
        return "PUNCT", "punct"
    if t in ("not", "n't"):
        return "PART", "neg"
    if t == "never":
        return "ADV", "neg"
    if t in _AUX:
        return "AUX", "aux"
    if t in _DET:
        return "DET", "det"
    if t in _PRON:
        return "PRON", "dep"
    if t in _CCONJ:
        return "CCONJ", "cc"
    if t in _ADP:
        return "ADP", "prep"
    if t.replace(",", "").replace(".", "").isdigit():
        return "NUM", "nummod"
    if t in _ADJ:
        return "ADJ", "amod"
    if t in _ADV or (t.endswith("ly") and len(t) > 3):
        return "ADV", "advmod"
    if t in _VERB:
        return "VERB", "dep"
    if t.endswith("ing") or t.endswith("ed"):
        return "VERB", "dep"
    if token[:1].isupper():
        return "PROPN", "dep"
    return "NOUN", "dep"


def _entities(words: list[str]) -> list[Optional[str]]:
    labels: list[Optional[str]] = [None] * len(words)
    for i, word in enumerate(words):
        low = word.lower()
        if low in _MONTHS or (word.isdigit() and len(word) == 4):
            labels[i] = "DATE"
    i = 0
    while i < len(words):
        if words[i][:1].isupper() and re.match(r"[A-Za-z]", words[i]):
            j = i
            while j + 1 < len(words) and words[j + 1][:1].isupper() and re.match(r"[A-Za-z]", words[j + 1]):
                j += 1
            if j > i:
                for k in range(i, j + 1):
                    labels[k] = labels[k] or "ORG"
            i = j + 1
        else:
            i += 1
    return labels


def annotate_rule_based(texts: list[str]) -> list[dict]:
    annotations = []
    for text in texts:
        words = _WORD_RE.findall(text)
        entity_labels = _entities(words)
        tokens = []
        pos_tags = []
        for word, entity in zip(words, entity_labels):
            pos, dep = _pos_of(word)
            pos_tags.append(pos)
            tokens.append(
                {
                    "text": word,
                    "lemma": word.lower(),
                    "pos": pos,
                    "dep": dep,
                    "is_stop": word.lower() in _STOP,
                    "ent": entity or "",
                }
            )
        annotations.append({"tokens": tokens, "noun_chunks": _chunks(pos_tags)})
    return annotations


def _chunks(pos_tags: list[str]) -> list[list[int]]:
    spans: list[list[int]] = []
    start = None
    seen_noun = False

    def close(s: int, e: int) -> None:
        while e > s and pos_tags[e - 1] not in _NOUNISH:
            e -= 1
        if e > s and any(p in _NOUNISH for p in pos_tags[s:e]):
            spans.append([s, e])

    for i, pos in enumerate(pos_tags):
        if pos in _CHUNKABLE:
            if start is None:
                start, seen_noun = i, False
            elif pos == "DET" and seen_noun:
                close(start, i)
                start, seen_noun = i, False
            if pos in _NOUNISH:
                seen_noun = True
        elif start is not None:
            close(start, i)
            start = None
    if start is not None:
        close(start, len(pos_tags))
    return spans


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


@dataclass
class ModelRegistry:
    config: SidecarConfig = field(default_factory=SidecarConfig)

    def __post_init__(self):
        if self.config.backend == "hash":
            self._backend = HashBackend(self.config)
        elif self.config.backend == "hf":
            self._backend = HfBackend(self.config)
        else:
            raise BackendError(f"unknown backend {self.config.backend!r}")
        self._declared_dims: dict[str, int] = {}

    def dims(self) -> dict[str, int]:
        return {**self._backend.dims(), **self._declared_dims}

    def embed(self, model: str, texts: list[str]) -> tuple[int, list[list[float]]]:
        dim, vectors = self._backend.embed(model, texts)
        declared = self._declared_dims.setdefault(model, dim)
        if declared != dim:
            raise BackendError(f"encoder dim changed mid-process: {declared} -> {dim}")
        return dim, vectors

    def sentiment(self, texts: list[str]) -> list[dict]:
        return self._backend.sentiment(texts)

    def fill_mask(self, text: str, top_k: int) -> list[dict]:
        return self._backend.fill_mask(text, top_k)

    def annotate(self, texts: list[str]) -> list[dict]:
        return annotate_rule_based(texts)
