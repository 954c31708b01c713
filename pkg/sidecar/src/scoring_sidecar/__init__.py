"""Scoring sidecar: model inference behind a small fixed HTTP protocol.

Endpoints (JSON, UTF-8):

    POST /v1/embed     {"model": "symmetric"|"asymmetric", "texts": [...]}
                       -> {"dim": d, "vectors": [[...], ...]}
    POST /v1/sentiment {"texts": [...]}
                       -> {"scores": [{"positive": p, "negative": q}, ...]}
    POST /v1/fill-mask {"text": "...", "top_k": k}
                       -> {"predictions": [{"token": t, "score": s}, ...]}
    POST /v1/annotate  {"texts": [...]}
                       -> {"annotations": [{"tokens": [...], "noun_chunks": [[s, e], ...]}]}
    GET  /v1/health    -> {"status": "ok", "dims": {...}}

Response order always matches request order. Malformed requests get 400,
oversized batches 413, model failures 500.
"""

__version__ = "0.1.0"
