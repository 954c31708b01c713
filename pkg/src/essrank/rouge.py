"""From-scratch ROUGE-1/2/L/SU4 scoring and run evaluation.

Conventions, fixed for reproducibility: tokens are lowercase alphanumeric
runs; no stemming, no stopword removal. SU4 pools unigrams and skip-bigrams
with at most 4 tokens skipped between pair members (pair (i, j) counted when
j - i <= 5) into one clipped overlap count.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from .errors import EmptyInput, InvalidConfig

__all__ = [
    "RougeScore",
    "rouge_n",
    "rouge_l",
    "rouge_su4",
    "oracle_upper_bound",
    "evaluate_run",
    "EvaluationReport",
    "METRICS",
]

_TOKEN_RE = re.compile(r"[a-z0-9]+")

SU_MAX_SKIP = 4

METRICS = ("r1", "r2", "rl", "rsu4")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScore":
        precision = overlap / candidate_total if candidate_total > 0 else 0.0
        recall = overlap / reference_total if reference_total > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_overlap(candidate: Counter, reference: Counter) -> int:
    return sum((candidate & reference).values())


def _require_reference(reference: str) -> list[str]:
    tokens = _tokenize(reference)
    if not tokens:
        raise EmptyInput("reference text has no tokens")
    return tokens


def rouge_n(candidate: str, reference: str, n: int) -> RougeScore:
    """Clipped n-gram overlap; recall over reference n-grams, precision over
    candidate n-grams."""
    if n < 1:
        raise InvalidConfig(f"n must be >= 1, got {n}")
    ref_tokens = _require_reference(reference)
    cand_tokens = _tokenize(candidate)
    cand_ngrams = _ngrams(cand_tokens, n)
    ref_ngrams = _ngrams(ref_tokens, n)
    overlap = _clipped_overlap(cand_ngrams, ref_ngrams)
    return RougeScore.from_counts(overlap, sum(cand_ngrams.values()), sum(ref_ngrams.values()))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Classic DP table, rolling rows.
    previous = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[len(b)]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence overlap."""
    ref_tokens = _require_reference(reference)
    cand_tokens = _tokenize(candidate)
    lcs = _lcs_length(cand_tokens, ref_tokens)
    return RougeScore.from_counts(lcs, len(cand_tokens), len(ref_tokens))


def _su_items(tokens: list[str]) -> Counter:
    items = Counter(("u", t) for t in tokens)
    for i in range(len(tokens)):
        for j in range(i + 1, min(i + SU_MAX_SKIP + 2, len(tokens))):
            items[("s", tokens[i], tokens[j])] += 1
    return items


def rouge_su4(candidate: str, reference: str) -> RougeScore:
    """Skip-bigram (gap <= 4) plus unigram overlap, pooled into one count."""
    ref_tokens = _require_reference(reference)
    cand_tokens = _tokenize(candidate)
    cand_items = _su_items(cand_tokens)
    ref_items = _su_items(ref_tokens)
    overlap = _clipped_overlap(cand_items, ref_items)
    return RougeScore.from_counts(overlap, sum(cand_items.values()), sum(ref_items.values()))


_SCORERS = {
    "r1": lambda c, r: rouge_n(c, r, 1),
    "r2": lambda c, r: rouge_n(c, r, 2),
    "rl": rouge_l,
    "rsu4": rouge_su4,
}


def score_all(candidate: str, reference: str, metrics=METRICS) -> dict[str, RougeScore]:
    unknown = [m for m in metrics if m not in _SCORERS]
    if unknown:
        raise InvalidConfig(f"unknown metrics {unknown}; choose from {sorted(_SCORERS)}")
    return {m: _SCORERS[m](candidate, reference) for m in metrics}


def oracle_upper_bound(unit, sentences: list[str]) -> tuple[int, RougeScore]:
    """Best-possible extractive pick: the source sentence with the highest
    skip-bigram F1 against the unit's reference (ties toward the lower index)."""
    if getattr(unit, "reference", None) is None:
        raise EmptyInput(f"unit {getattr(unit, 'id', '?')!r} has no reference summary")
    if not sentences:
        raise EmptyInput("no source sentences to scan")
    best_index = 0
    best_score = None
    for index, sentence in enumerate(sentences):
        score = rouge_su4(sentence, unit.reference)
        if best_score is None or score.f1 > best_score.f1:
            best_index, best_score = index, score
    return best_index, best_score


# ---------------------------------------------------------------------------
# Run-level evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvaluationReport:
    per_unit: list[dict]
    means: dict[str, dict[str, float]]
    omitted: list[str]
    count: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "omitted": self.omitted,
            "means": self.means,
            "per_unit": self.per_unit,
        }

    def table(self) -> str:
        headers = ["metric", "P", "R", "F1"]
        rows = [
            [m, f"{v['precision']:.4f}", f"{v['recall']:.4f}", f"{v['f1']:.4f}"]
            for m, v in self.means.items()
        ]
        return render_table(headers, rows)


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(cell)) for cell in column) for column in zip(headers, *rows)]
    line = "  ".join("-" * w for w in widths)
    out = ["  ".join(str(h).ljust(w) for h, w in zip(headers, widths)), line]
    for row in rows:
        out.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    return "\n".join(out)


def evaluate_run(predictions: dict[str, str], dataset, metrics=METRICS) -> EvaluationReport:
    """Per-unit and mean P/R/F1 for the selected metric variants.

    Units with no prediction (or no reference) are reported as omitted, not
    scored as zero.
    """
    per_unit = []
    omitted = []
    sums = {m: {"precision": 0.0, "recall": 0.0, "f1": 0.0} for m in metrics}
    scored = 0
    for unit in dataset:
        candidate = predictions.get(unit.id)
        if candidate is None or unit.reference is None:
            omitted.append(unit.id)
            continue
        scores = score_all(candidate, unit.reference, metrics)
        per_unit.append(
            {
                "unit_id": unit.id,
                "scores": {
                    m: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                    for m, s in scores.items()
                },
            }
        )
        for m, s in scores.items():
            sums[m]["precision"] += s.precision
            sums[m]["recall"] += s.recall
            sums[m]["f1"] += s.f1
        scored += 1
    means = {
        m: {k: (v / scored if scored else 0.0) for k, v in fields.items()}
        for m, fields in sums.items()
    }
    return EvaluationReport(per_unit=per_unit, means=means, omitted=omitted, count=scored)
