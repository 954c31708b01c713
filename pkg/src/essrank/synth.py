"""Synthetic fixture datasets.

The real corpus this engine was built for is not redistributable, so
experiments and the acceptance suite run on generated units whose geometry is
analytic under the stub embedder: token overlap is the only similarity
signal, which makes the intended winner of each ranking checkable by hand.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .textproc import EssUnit

__all__ = [
    "CbfsFixtureUnit",
    "make_cbfs_units",
    "make_icr_units",
    "make_planted_units",
]

# Small shared vocabularies keep the stub's hashed basis collision-free.
_QUERY_TOKENS = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta",
    "eta", "theta", "iota", "kappa", "lambda", "mu",
]
_FILLER_TOKENS = ["pebble", "ribbon", "lantern", "marble", "walnut", "copper", "velvet", "amber"]
_NOISE_TOKENS = ["fog", "dust", "mist", "silt", "soot", "haze", "grit", "smog"]


@dataclass
class CbfsFixtureUnit:
    """One synthetic unit plus the ground truth the fixture plants."""

    unit: EssUnit
    queries: list[str]  # three paraphrase formulations
    target_index: int  # sentence index the compound bias should favor
    sentences: list[str]


def make_cbfs_units(n_units: int = 30, seed: int = 7) -> list[CbfsFixtureUnit]:
    """Units where no single query formulation wins but their compound does.

    Each unit has one target sentence holding one token from each of three
    disjoint two-token queries, and per query a distractor holding both of
    that query's tokens; under bag-of-tokens cosine each single query scores
    its distractor (2/sqrt(6)) above the target (1/sqrt(6)), while the
    summed bias favors the target (3/sqrt(6)).
    """
    rng = random.Random(seed)
    fixtures = []
    for u in range(n_units):
        tokens = rng.sample(_QUERY_TOKENS, 6)
        queries = [f"{tokens[2 * i]} {tokens[2 * i + 1]}" for i in range(3)]
        target = " ".join(tokens[2 * i] for i in range(3))
        fillers = rng.sample(_FILLER_TOKENS, 3)
        distractors = [f"{tokens[2 * i]} {tokens[2 * i + 1]} {fillers[i]}" for i in range(3)]
        noise = [
            " ".join(rng.sample(_NOISE_TOKENS, 3)),
            " ".join(rng.sample(_NOISE_TOKENS, 3)),
        ]
        sentences = [target] + distractors + noise
        rng.shuffle(sentences)
        unit = EssUnit(
            id=f"cbfs-{u:03d}",
            entity="widget",
            sentiment="negative",
            documents=[". ".join(sentences) + "."],
            reference=target + ".",
        )
        fixtures.append(
            CbfsFixtureUnit(
                unit=unit,
                queries=queries,
                target_index=sentences.index(target),
                sentences=sentences,
            )
        )
    return fixtures


@dataclass
class IcrFixtureUnit:
    unit: EssUnit
    sentences: list[str]
    token_counts: list[int]
    guide_token_count: int


def make_icr_units(
    n_units: int = 12,
    seed: int = 11,
    lengths: tuple[int, ...] = (2, 6, 12),
    guide_length: int = 6,
) -> list[IcrFixtureUnit]:
    """Units whose sentences differ only in token count.

    Every sentence shares the single probe token the query will carry, so the
    raw-norm stub makes bias strength 1/sqrt(len) and the information-content
    penalty |sqrt(len) - sqrt(guide_length)|; sweeping the penalty weight
    upward should move selections toward guide-length sentences.
    """
    rng = random.Random(seed)
    fixtures = []
    for u in range(n_units):
        order = list(lengths)
        rng.shuffle(order)
        sentences = []
        for length in order:
            # Fillers keyed by length: disjoint within a unit, shared across
            # units so the stub vocabulary stays small.
            fillers = [f"pad{length}n{i}" for i in range(length - 1)]
            sentences.append(" ".join(["probe"] + fillers))
        unit = EssUnit(
            id=f"icr-{u:03d}",
            entity="probe",
            sentiment="negative",
            documents=[". ".join(sentences) + "."],
            reference="probe.",
        )
        fixtures.append(
            IcrFixtureUnit(
                unit=unit,
                sentences=sentences,
                token_counts=list(order),
                guide_token_count=guide_length,
            )
        )
    return fixtures


def guide_texts(guide_length: int = 6, count: int = 3) -> list[str]:
    """Guide example sentences with a fixed token count."""
    return [" ".join(f"guide{g}tok{i}" for i in range(guide_length)) for g in range(count)]


_TOPICS = [
    ("battery", "drains fast", "terrible"),
    ("screen", "cracked early", "awful"),
    ("shipping", "arrived late", "poor"),
    ("keyboard", "feels great", "excellent"),
    ("camera", "focuses quickly", "wonderful"),
    ("speaker", "sounds clear", "fantastic"),
]


def make_planted_units(n_units: int = 20, seed: int = 3) -> list[EssUnit]:
    """Units whose reference summary appears verbatim among the source
    sentences; the extractive upper bound on them is exact."""
    rng = random.Random(seed)
    units = []
    for u in range(n_units):
        noun, action, adjective = _TOPICS[u % len(_TOPICS)]
        sentiment = "positive" if adjective in ("excellent", "wonderful", "fantastic") else "negative"
        reference = f"The {noun} {action} and feels {adjective}."
        others = [
            f"The manual mentions the {noun} twice.",
            "Setup took about five minutes in total.",
            "The box includes a short cable.",
        ]
        position = rng.randrange(len(others) + 1)
        sentences = others[:position] + [reference] + others[position:]
        units.append(
            EssUnit(
                id=f"planted-{u:03d}",
                entity=f"Gadget{u:02d}",
                sentiment=sentiment,
                documents=[" ".join(sentences)],
                reference=reference,
            )
        )
    return units
