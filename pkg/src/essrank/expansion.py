"""Query formulation and expansion: the bias sources of the ranker.

Reference-based queries mine the development split's reference summaries for
frequent words (or noun phrases); those seeds can be expanded three ways:
by ranking corpus phrases with the single-bias recursion and re-ordering by
corpus frequency, by electing next-best mask-fill predictions from indicative
patterns, or by retrieving the phrases closest to a short sentiment phrase in
an asymmetric search embedding space.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInput, InvalidConfig, ProviderError
from .numerics import cosine_similarity
from .ranking import RankConfig, rank
from .textproc import Phrase, filter_terms, normalize_phrase, term_frequencies

log = logging.getLogger(__name__)

__all__ = [
    "Query",
    "BiasSet",
    "frw_query",
    "frp_query",
    "frp_btr_expand",
    "mpb2_expand",
    "sentiment_qe",
    "prepend_entity",
    "build_bias_set",
    "DEFAULT_SENTIMENT_PHRASES",
]

DEFAULT_SENTIMENT_PHRASES = ("excellent service", "poor experience")


@dataclass(frozen=True)
class Query:
    """An ordered, duplicate-free term list plus provenance."""

    label: str
    terms: tuple[str, ...]
    entity_prepended: bool = False
    seed_text: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise EmptyInput(f"query {self.label!r} has no terms")
        keys = [normalize_phrase(t) for t in self.terms]
        if len(set(keys)) != len(keys):
            raise InvalidConfig(f"query {self.label!r} contains duplicate terms")

    @property
    def text(self) -> str:
        return " ".join(self.terms)


@dataclass
class BiasSet:
    """Bias rows aligned with their source queries.

    In the default one-row-per-query mode, row count equals query count plus
    any appended sentiment rows; provenance has exactly one tag per row.
    """

    queries: list[Query]
    bias_vectors: np.ndarray
    provenance: list[str] = field(default_factory=list)

    def append_row(self, vector: np.ndarray, provenance: str) -> None:
        vector = np.asarray(vector, dtype=np.float64).reshape(1, -1)
        if vector.shape[1] != self.bias_vectors.shape[1]:
            raise InvalidConfig(
                f"bias row length {vector.shape[1]} != {self.bias_vectors.shape[1]}"
            )
        self.bias_vectors = np.vstack([self.bias_vectors, vector])
        self.provenance.append(provenance)


def _top_terms(counts: dict[str, int], n_terms: int) -> list[str]:
    # Stable sort: ties keep first-occurrence order from the counts dict.
    ranked = sorted(counts.items(), key=lambda kv: -kv[1])
    return [term for term, _ in ranked[:n_terms]]


def frw_query(dev_references: Sequence[str], n_terms: int = 20, annotator=None) -> Query:
    """Frequent reference-words query from the development references."""
    if not dev_references:
        raise EmptyInput("no development references to mine for frequent words")
    counts = term_frequencies(list(dev_references), unit="word")
    terms = filter_terms(_top_terms(counts, n_terms), annotator)
    if not terms:
        raise EmptyInput("no frequent reference words survive term filtering")
    return Query(label="frw", terms=tuple(terms))


def frp_query(dev_references: Sequence[str], n_terms: int = 20, annotator=None) -> Query:
    """Frequent reference-phrases query (noun phrases as counting units)."""
    if not dev_references:
        raise EmptyInput("no development references to mine for frequent phrases")
    counts = term_frequencies(list(dev_references), unit="noun_phrase", annotator=annotator)
    terms = filter_terms(_top_terms(counts, n_terms), annotator)
    if not terms:
        raise EmptyInput("no frequent reference phrases survive term filtering")
    return Query(label="frp", terms=tuple(terms))


def _dedup_phrases(phrases: Sequence[Phrase]) -> list[Phrase]:
    pool: dict[str, Phrase] = {}
    for phrase in phrases:
        existing = pool.get(phrase.text)
        if existing is None:
            pool[phrase.text] = replace(phrase)
        else:
            existing.frequency += phrase.frequency
    return list(pool.values())


def frp_btr_expand(
    seed: Query,
    corpus_phrases: Sequence[Phrase],
    config: RankConfig,
    embedder,
    n_out: int = 20,
    annotator=None,
) -> Query:
    """Expand a seed query over the corpus phrase pool.

    Phrases are ranked by the single-bias recursion (the seed's embedding as
    the one bias, no information-content penalty), re-ordered by descending
    corpus frequency with the recursion rank as tie-break, truncated, and
    filtered.
    """
    pool = _dedup_phrases(corpus_phrases)
    if not pool:
        raise EmptyInput("corpus phrase pool is empty")
    texts = [p.text for p in pool]
    phrase_vectors = embedder.embed(texts, model="symmetric")
    seed_vector = embedder.embed([seed.text], model="symmetric")
    bias = cosine_similarity(seed_vector, phrase_vectors)
    btr_config = replace(config, beta=0.0, reduction="sum")
    result = rank(phrase_vectors, bias, None, btr_config)
    by_score = sorted(range(len(pool)), key=lambda i: (-result.scores[i], i))
    rank_position = {i: pos for pos, i in enumerate(by_score)}
    by_frequency = sorted(range(len(pool)), key=lambda i: (-pool[i].frequency, rank_position[i]))
    terms = [texts[i] for i in by_frequency[:n_out]]
    terms = filter_terms(terms, annotator)
    if not terms:
        raise EmptyInput("no expansion phrases survive term filtering")
    return Query(label=f"{seed.label}-btr", terms=tuple(terms), seed_text=seed.text)


def _mask_occurrences(term: str, sentences: Sequence[str], mask_token: str, limit: int) -> list[str]:
    """Indicative patterns: sentences with the term's first occurrence masked."""
    pattern = re.compile(r"\b" + re.escape(term) + r"\b", re.IGNORECASE)
    masked = []
    for sentence in sentences:
        if len(masked) >= limit:
            break
        if pattern.search(sentence):
            masked.append(pattern.sub(mask_token, sentence, count=1))
    return masked


def mpb2_expand(
    seed: Query,
    corpus_sentences: Sequence[str],
    mask_provider,
    per_term_k: int = 3,
    patterns_per_term: int = 10,
    annotator=None,
) -> Query:
    """Mask-fill pattern expansion of a seed query.

    Each seed term is masked where it occurs in the corpus; when the
    provider's top prediction recovers the masked term, its next-best
    predictions become candidate expansion terms.
    """
    if mask_provider is None:
        raise ProviderError("mask-fill expansion requires a configured provider")
    from .providers import MASK_TOKEN

    expansions: list[str] = []
    seen = {normalize_phrase(t) for t in seed.terms}
    for term in seed.terms:
        patterns = _mask_occurrences(term, corpus_sentences, MASK_TOKEN, patterns_per_term)
        if not patterns:
            log.info("mpb2: seed term %r not found in the corpus; contributes nothing", term)
            continue
        for masked_text in patterns:
            predictions = mask_provider.fill_mask(masked_text, top_k=per_term_k + 1)
            if not predictions:
                continue
            top_token = normalize_phrase(predictions[0][0])
            if top_token != normalize_phrase(term):
                continue  # election rule: only correctly recovered masks expand
            for token, _score in predictions[1 : per_term_k + 1]:
                key = normalize_phrase(token)
                if key and key not in seen:
                    seen.add(key)
                    expansions.append(token)
    expansions = filter_terms(expansions, annotator)
    return Query(
        label=f"{seed.label}-mpb2",
        terms=tuple(list(seed.terms) + expansions),
        seed_text=seed.text,
    )


def sentiment_qe(
    sentiment: str,
    sentiment_phrase_pair: tuple[str, str],
    corpus_phrases: Sequence[Phrase],
    asym_embedder,
    top_k: int = 30,
    annotator=None,
) -> Query:
    """Sentiment-based expansion: nearest corpus phrases to a sentiment phrase.

    The pair element matching the queried sentiment is embedded together with
    the (filtered) corpus phrases by the asymmetric search model; the top_k
    most cosine-similar phrases become the query terms (ties break toward the
    lower phrase index).
    """
    if sentiment not in ("positive", "negative"):
        raise InvalidConfig(f"unknown sentiment {sentiment!r}")
    pool = _dedup_phrases(corpus_phrases)
    if not pool:
        raise EmptyInput("corpus phrase pool is empty")
    seed_text = sentiment_phrase_pair[0] if sentiment == "positive" else sentiment_phrase_pair[1]
    texts = filter_terms([p.text for p in pool], annotator)
    if not texts:
        raise EmptyInput("no corpus phrases survive term filtering")
    phrase_vectors = asym_embedder.embed(texts, model="asymmetric")
    seed_vector = asym_embedder.embed([seed_text], model="asymmetric")
    sims = cosine_similarity(seed_vector, phrase_vectors)[0]
    order = sorted(range(len(texts)), key=lambda i: (-sims[i], i))
    terms = [texts[i] for i in order[: min(top_k, len(texts))]]
    return Query(label="sentiment-qe", terms=tuple(terms), seed_text=seed_text)


def prepend_entity(query: Query, entity: str) -> Query:
    """Put the targeted entity at term position 0 (idempotent)."""
    if not entity.strip():
        log.warning("prepend_entity called with an empty entity; query unchanged")
        return query
    if query.entity_prepended and query.terms and query.terms[0] == entity:
        return query
    rest = [t for t in query.terms if normalize_phrase(t) != normalize_phrase(entity)]
    return replace(query, terms=tuple([entity] + rest), entity_prepended=True)


def build_bias_set(queries: Sequence[Query], s: np.ndarray, embedder, per_term_bias: bool = False) -> BiasSet:
    """Embed queries and compare them against the sentence encodings.

    Default: one row per query, embedding the space-joined term string.
    per_term_bias=True emits one row per term instead (the row count then
    exceeds the query count).
    """
    queries = list(queries)
    if not queries:
        raise EmptyInput("need at least one query to build a bias set")
    if per_term_bias:
        texts = [term for q in queries for term in q.terms]
    else:
        texts = [q.text for q in queries]
    query_vectors = embedder.embed(texts, model="symmetric")
    rows = cosine_similarity(query_vectors, s)
    return BiasSet(
        queries=queries,
        bias_vectors=rows,
        provenance=["embedding-similarity"] * rows.shape[0],
    )
