"""Query-focused extractive summarization with compound bias ranking.

Sentences are scored by a damped power iteration over a thresholded
similarity graph, teleporting toward a compound of query and sentiment
biases, optionally regularized toward a target information content. The
package also ships query formulation/expansion, a from-scratch ROUGE
harness, and deterministic model-provider stubs for offline runs.
"""

from .errors import EssrankError
from .expansion import (
    BiasSet,
    Query,
    build_bias_set,
    frp_btr_expand,
    frp_query,
    frw_query,
    mpb2_expand,
    prepend_entity,
    sentiment_qe,
)
from .numerics import cosine_similarity, row_norms, sum_normalize
from .providers import CachedEmbeddings, HttpProvider, ProviderConfig, StubProvider, make_provider
from .ranking import (
    RankConfig,
    RankResult,
    build_adjacency,
    compound_bias,
    ic_distances,
    rank,
    reduce_biases,
    select_top,
)
from .rouge import RougeScore, evaluate_run, oracle_upper_bound, rouge_l, rouge_n, rouge_su4
from .sentiment import SentimentScore, sentiment_bias_vector
from .textproc import (
    AnnotatedToken,
    EssUnit,
    Phrase,
    SentenceRecord,
    extract_noun_phrases,
    extract_verb_phrases,
    filter_terms,
    load_units,
    save_units,
    segment_sentences,
    segment_unit,
    term_frequencies,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedToken",
    "BiasSet",
    "CachedEmbeddings",
    "EssUnit",
    "EssrankError",
    "HttpProvider",
    "Phrase",
    "ProviderConfig",
    "Query",
    "RankConfig",
    "RankResult",
    "RougeScore",
    "SentenceRecord",
    "SentimentScore",
    "StubProvider",
    "build_adjacency",
    "build_bias_set",
    "compound_bias",
    "cosine_similarity",
    "evaluate_run",
    "extract_noun_phrases",
    "extract_verb_phrases",
    "filter_terms",
    "frp_btr_expand",
    "frp_query",
    "frw_query",
    "ic_distances",
    "load_units",
    "make_provider",
    "mpb2_expand",
    "oracle_upper_bound",
    "prepend_entity",
    "rank",
    "reduce_biases",
    "rouge_l",
    "rouge_n",
    "rouge_su4",
    "row_norms",
    "save_units",
    "segment_sentences",
    "segment_unit",
    "select_top",
    "sentiment_bias_vector",
    "sentiment_qe",
    "sum_normalize",
    "term_frequencies",
]
