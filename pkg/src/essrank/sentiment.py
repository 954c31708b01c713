"""Classifier-probability bias vector for the queried sentiment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig

__all__ = ["SentimentScore", "sentiment_bias_vector"]


@dataclass(frozen=True)
class SentimentScore:
    """Probability pair for one text passage."""

    positive: float
    negative: float

    def __post_init__(self):
        for name in ("positive", "negative"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"{name} probability {value} outside [0, 1]")

    def for_sentiment(self, sentiment: str) -> float:
        if sentiment == "positive":
            return self.positive
        if sentiment == "negative":
            return self.negative
        raise InvalidConfig(f"unknown sentiment {sentiment!r}")


def sentiment_bias_vector(sentences, sentiment: str, classifier_provider) -> np.ndarray:
    """Per-sentence probability of the queried sentiment.

    `sentences` may be SentenceRecords or plain strings. Provider failures
    propagate; there are no silent zeros.
    """
    if sentiment not in ("positive", "negative"):
        raise InvalidConfig(f"unknown sentiment {sentiment!r}")
    texts = [s.text if hasattr(s, "text") else s for s in sentences]
    if not texts:
        return np.zeros(0)
    scores = classifier_provider.sentiment(texts)
    return np.array([score.for_sentiment(sentiment) for score in scores])
