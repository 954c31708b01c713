"""Documents to sentences, tokens, and phrases.

Sentence segmentation is rule-based (terminators . ! ? with an abbreviation
exception list) so runs reproduce without external models. Part-of-speech,
dependency, NER, and noun-chunk annotations come from a provider (see
:mod:`essrank.providers`); everything downstream only consumes the annotated
records. Without an annotator the pipeline degrades: phrase extraction
returns nothing and term filtering skips NER removal, with a warning.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import EmptyInput, InvalidConfig, MissingAnnotations
from .stopwords import STOPWORDS

log = logging.getLogger(__name__)

__all__ = [
    "AnnotatedToken",
    "SentenceRecord",
    "Phrase",
    "EssUnit",
    "segment_sentences",
    "segment_unit",
    "extract_noun_phrases",
    "extract_verb_phrases",
    "collect_phrases",
    "term_frequencies",
    "filter_terms",
    "load_units",
    "save_units",
    "tokenize_words",
    "normalize_phrase",
]

SENTIMENTS = ("positive", "negative")

# Tokens that end with "." without ending a sentence.
ABBREVIATIONS = frozenset(
    "dr mr mrs ms prof sr jr st no vs etc inc ltd co corp dept est fig al "
    "e.g i.e u.s u.k a.m p.m".split()
)

_TERMINATORS = ".!?"
_CLOSERS = "\"')]}”’"

FILTERED_ENTITY_LABELS = frozenset({"DATE", "ORG", "PERSON"})

_WORD_RE = re.compile(r"[a-z0-9]+(?:'[a-z]+)?")


@dataclass(frozen=True)
class AnnotatedToken:
    text: str
    lemma: str
    pos: str
    dep: str
    is_stopword: bool
    entity_label: Optional[str] = None


@dataclass
class SentenceRecord:
    unit_id: str
    doc_index: int
    sent_index: int
    text: str
    tokens: list[AnnotatedToken] = field(default_factory=list)
    # (start, end) token spans from the annotation provider's chunker.
    noun_chunks: Optional[list[tuple[int, int]]] = None


@dataclass
class Phrase:
    text: str
    kind: str  # "noun" | "verb"
    source: tuple[int, int] = (0, 0)
    frequency: int = 1
    # Verb phrases keep the matched span including the leading wildcard
    # token; `text` is the wildcard-stripped form used for embeddings.
    full_text: Optional[str] = None


@dataclass
class EssUnit:
    """One dataset record: an entity, a queried sentiment, documents, and an
    optional single-sentence reference summary."""

    id: str
    entity: str
    sentiment: str
    documents: list[str]
    reference: Optional[str] = None

    def __post_init__(self):
        if self.sentiment not in SENTIMENTS:
            raise InvalidConfig(
                f"unit {self.id!r}: sentiment must be one of {SENTIMENTS}, got {self.sentiment!r}"
            )
        if not self.documents:
            raise InvalidConfig(f"unit {self.id!r}: needs at least one document")
        if self.reference is not None and not self.reference.strip():
            raise InvalidConfig(f"unit {self.id!r}: reference present but empty")


def tokenize_words(text: str) -> list[str]:
    """Lowercased alphanumeric word tokens (apostrophe contractions kept)."""
    return _WORD_RE.findall(text.lower())


def normalize_phrase(text: str) -> str:
    """Lowercase and collapse internal whitespace."""
    return " ".join(text.split()).lower()


def _is_abbreviation(text: str, dot_pos: int) -> bool:
    j = dot_pos
    while j > 0 and (text[j - 1].isalpha() or text[j - 1] == "."):
        j -= 1
    word = text[j:dot_pos].lower().rstrip(".")
    return word in ABBREVIATIONS


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS:
            # Consume runs like "?!" and trailing quotes/brackets.
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            while j + 1 < n and text[j + 1] in _CLOSERS:
                j += 1
            follows_space = j + 1 >= n or text[j + 1].isspace()
            if follows_space and not (ch == "." and _is_abbreviation(text, i)):
                spans.append((start, j + 1))
                start = j + 1
            i = j + 1
        else:
            i += 1
    if start < n and text[start:].strip():
        spans.append((start, n))
    return spans


def segment_sentences(document: str, unit_id: str = "", doc_index: int = 0) -> list[SentenceRecord]:
    """Split one raw document into ordered sentence records.

    Total w.r.t. non-whitespace content: concatenating the sentence texts
    recovers everything except inter-sentence whitespace. Tokens are filled
    in later by the annotation step.
    """
    records = []
    for start, end in _sentence_spans(document):
        text = document[start:end].strip()
        if text:
            records.append(
                SentenceRecord(
                    unit_id=unit_id,
                    doc_index=doc_index,
                    sent_index=len(records),
                    text=text,
                )
            )
    return records


def segment_unit(unit: EssUnit) -> list[SentenceRecord]:
    """Segment every document of a unit; sentence indices restart per document."""
    records = []
    for doc_index, document in enumerate(unit.documents):
        records.extend(segment_sentences(document, unit_id=unit.id, doc_index=doc_index))
    return records


# ---------------------------------------------------------------------------
# Phrase extraction
# ---------------------------------------------------------------------------

_NOUN_POS = {"NOUN", "PROPN"}
_CHUNKABLE_POS = {"DET", "ADJ", "NOUN", "PROPN", "NUM"}

# Verb-phrase shape: any token, optional auxiliary, optional negation, one or
# more verbs, any adverbs, one or more adjectives.
VP_PATTERN = (
    {"wildcard": True},
    {"pos": "AUX", "op": "?"},
    {"dep": "neg", "op": "?"},
    {"pos": "VERB", "op": "+"},
    {"pos": "ADV", "op": "*"},
    {"pos": "ADJ", "op": "+"},
)


def _token_matches(token: AnnotatedToken, spec: dict) -> bool:
    if spec.get("wildcard"):
        return True
    if "pos" in spec and token.pos != spec["pos"]:
        return False
    if "dep" in spec and token.dep != spec["dep"]:
        return False
    return True


def _longest_vp_match(tokens: list[AnnotatedToken], start: int) -> Optional[int]:
    """End index (exclusive) of the longest VP_PATTERN match anchored at start."""
    best: Optional[int] = None

    def attempt(ti: int, pi: int) -> None:
        nonlocal best
        if pi == len(VP_PATTERN):
            if best is None or ti > best:
                best = ti
            return
        spec = VP_PATTERN[pi]
        op = spec.get("op", "1")
        if op in ("?", "*"):
            attempt(ti, pi + 1)
        if op in ("1", "?"):
            if ti < len(tokens) and _token_matches(tokens[ti], spec):
                attempt(ti + 1, pi + 1)
        elif op in ("+", "*"):
            j = ti
            while j < len(tokens) and _token_matches(tokens[j], spec):
                j += 1
                attempt(j, pi + 1)

    # The leading wildcard has no "op" key; treat it as a single mandatory token.
    attempt(start, 0)
    return best


def derive_noun_chunk_spans(tokens: list[AnnotatedToken]) -> list[tuple[int, int]]:
    """Maximal noun-headed spans from POS tags alone.

    Accumulates DET/ADJ/NUM/NOUN/PROPN runs, starts a fresh span at a
    determiner that follows a noun, and trims each span to end at its last
    noun. Used by the stub annotator and as the fallback chunker.
    """
    spans = []
    run_start = None
    seen_noun = False

    def close(start: int, end: int) -> None:
        while end > start and tokens[end - 1].pos not in _NOUN_POS:
            end -= 1
        if end > start and any(t.pos in _NOUN_POS for t in tokens[start:end]):
            spans.append((start, end))

    for i, tok in enumerate(tokens):
        if tok.pos in _CHUNKABLE_POS:
            if run_start is None:
                run_start, seen_noun = i, False
            elif tok.pos == "DET" and seen_noun:
                close(run_start, i)
                run_start, seen_noun = i, False
            if tok.pos in _NOUN_POS:
                seen_noun = True
        elif run_start is not None:
            close(run_start, i)
            run_start = None
    if run_start is not None:
        close(run_start, len(tokens))
    return spans


def extract_noun_phrases(sentence: SentenceRecord) -> list[Phrase]:
    """Noun phrases of one annotated sentence, lowercased, in order."""
    if not sentence.tokens:
        raise MissingAnnotations(
            f"sentence ({sentence.doc_index}, {sentence.sent_index}) has no token annotations"
        )
    spans = sentence.noun_chunks
    if spans is None:
        spans = derive_noun_chunk_spans(sentence.tokens)
    phrases = []
    for start, end in spans:
        text = normalize_phrase(" ".join(t.text for t in sentence.tokens[start:end]))
        if text:
            phrases.append(
                Phrase(text=text, kind="noun", source=(sentence.doc_index, sentence.sent_index))
            )
    return phrases


def extract_verb_phrases(sentence: SentenceRecord) -> list[Phrase]:
    """Verb phrases matching the VP token pattern, longest-first per start,
    non-overlapping left to right."""
    if not sentence.tokens:
        raise MissingAnnotations(
            f"sentence ({sentence.doc_index}, {sentence.sent_index}) has no token annotations"
        )
    tokens = sentence.tokens
    phrases = []
    i = 0
    while i < len(tokens):
        end = _longest_vp_match(tokens, i)
        if end is None:
            i += 1
            continue
        full = normalize_phrase(" ".join(t.text for t in tokens[i:end]))
        stripped = normalize_phrase(" ".join(t.text for t in tokens[i + 1 : end]))
        phrases.append(
            Phrase(
                text=stripped,
                kind="verb",
                source=(sentence.doc_index, sentence.sent_index),
                full_text=full,
            )
        )
        i = end
    return phrases


def collect_phrases(sentences: Iterable[SentenceRecord], kinds: tuple[str, ...] = ("noun", "verb")) -> list[Phrase]:
    """Deduplicated corpus phrase pool with summed frequencies.

    Order follows first occurrence; `source` keeps the first sighting.
    """
    pool: dict[str, Phrase] = {}
    for sentence in sentences:
        found = []
        if "noun" in kinds:
            found.extend(extract_noun_phrases(sentence))
        if "verb" in kinds:
            found.extend(extract_verb_phrases(sentence))
        for phrase in found:
            existing = pool.get(phrase.text)
            if existing is None:
                pool[phrase.text] = phrase
            else:
                existing.frequency += 1
    return list(pool.values())


# ---------------------------------------------------------------------------
# Term counting and filtering
# ---------------------------------------------------------------------------


def term_frequencies(corpus: list[str], unit: str = "word", annotator=None) -> dict[str, int]:
    """Case-folded term counts over a corpus, in first-occurrence order.

    unit="word" counts non-stopword word tokens; unit="noun_phrase" counts
    noun chunks and needs an annotation provider (returns {} with a warning
    otherwise).
    """
    if unit not in ("word", "noun_phrase"):
        raise InvalidConfig(f"unknown counting unit {unit!r}")
    counts: dict[str, int] = {}
    if unit == "word":
        for text in corpus:
            for token in tokenize_words(text):
                if token in STOPWORDS:
                    continue
                counts[token] = counts.get(token, 0) + 1
        return counts
    if annotator is None:
        log.warning("no annotation provider configured; noun-phrase counting returns nothing")
        return counts
    for text in corpus:
        record = SentenceRecord(unit_id="", doc_index=0, sent_index=0, text=text)
        annotator.annotate_records([record])
        for phrase in extract_noun_phrases(record):
            counts[phrase.text] = counts.get(phrase.text, 0) + 1
    return counts


def _all_stopwords(term: str) -> bool:
    tokens = tokenize_words(term)
    return bool(tokens) and all(t in STOPWORDS for t in tokens)


def filter_terms(terms: list[str], annotator=None) -> list[str]:
    """Order-preserving cleanup of a term list.

    Drops case-folded duplicates, terms entirely composed of stopwords, terms
    with no word tokens at all, and terms containing DATE/ORG/PERSON entity
    mentions (skipped with a warning when no annotator is configured).
    """
    seen = set()
    kept = []
    for term in terms:
        key = normalize_phrase(term)
        if not key or key in seen:
            continue
        seen.add(key)
        if not tokenize_words(term) or _all_stopwords(term):
            continue
        kept.append(term)
    if not kept:
        return kept
    if annotator is None:
        log.warning("no annotation provider configured; skipping NER-based term removal")
        return kept
    annotations = annotator.annotate(kept)
    filtered = []
    for term, annotation in zip(kept, annotations):
        labels = {t.entity_label for t in annotation.tokens if t.entity_label}
        if labels & FILTERED_ENTITY_LABELS:
            continue
        filtered.append(term)
    return filtered


# ---------------------------------------------------------------------------
# Dataset file format: JSON-lines, one unit per line
# ---------------------------------------------------------------------------


def load_units(path) -> list[EssUnit]:
    """Read a JSON-lines dataset of units (UTF-8, one object per line)."""
    units = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}:{lineno}: malformed JSON ({exc})") from exc
        units.append(
            EssUnit(
                id=str(raw["id"]),
                entity=raw["entity"],
                sentiment=raw["sentiment"],
                documents=list(raw["documents"]),
                reference=raw.get("reference"),
            )
        )
    if not units:
        raise EmptyInput(f"dataset {path} contains no units")
    return units


def save_units(path, units: list[EssUnit]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for unit in units:
            record = {
                "id": unit.id,
                "entity": unit.entity,
                "sentiment": unit.sentiment,
                "documents": unit.documents,
            }
            if unit.reference is not None:
                record["reference"] = unit.reference
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
