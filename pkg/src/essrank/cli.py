"""Batch entry points: summarize, expand, evaluate, oracle, ablate.

Config precedence is CLI flags > config file (flat `key = value` lines) >
defaults. All outputs are JSON / JSON-lines; `--table` additionally renders
an aligned text grid. Exit code 0 on success, 1 with a one-line JSON
diagnostic on stderr otherwise.
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import EmptyInput, EssrankError, InvalidConfig
from .expansion import (
    DEFAULT_SENTIMENT_PHRASES,
    Query,
    build_bias_set,
    frp_btr_expand,
    frp_query,
    frw_query,
    mpb2_expand,
    prepend_entity,
    sentiment_qe,
)
from .providers import make_provider
from .ranking import RankConfig, rank, select_top
from .rouge import METRICS, evaluate_run, oracle_upper_bound, render_table, score_all
from .sentiment import sentiment_bias_vector
from .textproc import EssUnit, collect_phrases, load_units, segment_unit

METHODS = ("bq", "ert", "sb", "user")

# Per-method penalty-weight defaults; reference-derived queries need less
# regularization than sentiment biases.
METHOD_BETA = {"bq": 0.0, "user": 0.0, "ert": 0.1, "sb": 0.2}

EXPAND_METHODS = ("bq", "frw", "frp", "frw-mpb2", "frp-mpb2", "frp-btr", "ert", "sentiment-qe")


@dataclass
class RunConfig:
    dataset: str = ""
    alpha: float = 0.1
    beta: float | None = None  # resolved per method when unset
    theta: float = 0.65
    k: int = 1
    method: str = "sb"
    provider: str = "stub"
    cache: str | None = None
    seed: int = 0
    split: float = 0.75
    metrics: tuple[str, ...] = METRICS
    out: str | None = None
    subset: str = "test"  # dev | test | all
    queries: tuple[str, ...] = ()
    guide: str | None = None
    max_iterations: int = 100
    epsilon: float = 1e-6
    reduction: str = "sum"
    threshold_mode: str = "raw"
    n_terms: int = 20
    per_term_k: int = 3
    patterns_per_term: int = 10
    qe_top_k: int = 30
    per_term_bias: bool = False
    term_source: str = "references"  # references | documents
    sentiment_phrases: tuple[str, str] = DEFAULT_SENTIMENT_PHRASES
    table: bool = False

    def __post_init__(self):
        if not 0.0 < self.split < 1.0:
            raise InvalidConfig(f"split must lie strictly in (0, 1), got {self.split}")
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.method not in METHODS:
            raise InvalidConfig(f"method must be one of {METHODS}")
        if self.subset not in ("dev", "test", "all"):
            raise InvalidConfig("subset must be dev, test, or all")

    def resolved_beta(self) -> float:
        return METHOD_BETA[self.method] if self.beta is None else self.beta

    def rank_config(self, beta: float | None = None) -> RankConfig:
        return RankConfig(
            alpha=self.alpha,
            beta=self.resolved_beta() if beta is None else beta,
            theta=self.theta,
            max_iterations=self.max_iterations,
            epsilon=self.epsilon,
            reduction=self.reduction,
            threshold_mode=self.threshold_mode,
        )


def split_units(units: list[EssUnit], ratio: float, seed: int) -> tuple[list[EssUnit], list[EssUnit]]:
    """Deterministic dev/test split: pure in (dataset order, ratio, seed)."""
    indices = list(range(len(units)))
    random.Random(seed).shuffle(indices)
    n_dev = int(ratio * len(units))
    if len(units) >= 2:
        n_dev = max(1, min(len(units) - 1, n_dev))
    dev = sorted(indices[:n_dev])
    test = sorted(indices[n_dev:])
    return [units[i] for i in dev], [units[i] for i in test]


def baseline_query(unit: EssUnit) -> Query:
    return Query(
        label="bq",
        terms=(f"Why did {unit.entity} receive {unit.sentiment} feedback",),
    )


def build_ert_queries(dev_units: list[EssUnit], provider, config: RunConfig) -> list[Query]:
    """The frozen three-query expansion set mined from the development split."""
    refs = [u.reference for u in dev_units if u.reference]
    if not refs:
        raise EmptyInput("the development split has no reference summaries to mine")
    dev_records = [r for unit in dev_units for r in segment_unit(unit)]
    if config.term_source == "documents":
        source_texts = [r.text for r in dev_records]
    else:
        source_texts = refs
    frw = frw_query(source_texts, config.n_terms, annotator=provider)
    frp = frp_query(source_texts, config.n_terms, annotator=provider)
    provider.annotate_records(dev_records)
    corpus_sentences = [r.text for r in dev_records]
    phrase_pool = collect_phrases(dev_records, kinds=("noun",))
    frw_mpb2 = mpb2_expand(
        frw, corpus_sentences, provider, config.per_term_k, config.patterns_per_term, annotator=provider
    )
    frp_mpb2 = mpb2_expand(
        frp, corpus_sentences, provider, config.per_term_k, config.patterns_per_term, annotator=provider
    )
    frp_btr = frp_btr_expand(
        frp, phrase_pool, config.rank_config(beta=0.0), provider, n_out=config.n_terms, annotator=provider
    )
    return [frw_mpb2, frp_mpb2, frp_btr]


def _guide_texts(config: RunConfig, dev_units: list[EssUnit]) -> list[str]:
    if config.guide:
        lines = [ln.strip() for ln in Path(config.guide).read_text(encoding="utf-8").splitlines()]
        return [ln for ln in lines if ln]
    return [u.reference for u in dev_units if u.reference]


def _unit_bias_set(unit: EssUnit, records, sentence_matrix, provider, config: RunConfig, ert_queries):
    if config.method == "bq":
        queries = [baseline_query(unit)]
    elif config.method == "user":
        if not config.queries:
            raise InvalidConfig("method=user needs at least one --query")
        queries = [Query(label="user", terms=(q,)) for q in config.queries]
    elif config.method == "ert":
        queries = [prepend_entity(q, unit.entity) for q in ert_queries]
    else:  # sb
        provider.annotate_records(records)
        pool = collect_phrases(records, kinds=("noun", "verb"))
        qe = sentiment_qe(
            unit.sentiment,
            config.sentiment_phrases,
            pool,
            provider,
            top_k=config.qe_top_k,
            annotator=provider,
        )
        queries = [prepend_entity(qe, unit.entity)]
    bias_set = build_bias_set(queries, sentence_matrix, provider, per_term_bias=config.per_term_bias)
    if config.method == "sb":
        bias_set.append_row(
            sentiment_bias_vector(records, unit.sentiment, provider), "sentiment-classifier"
        )
    return bias_set


def summarize_unit(unit, provider, config: RunConfig, ert_queries=None, guide_matrix=None) -> dict:
    records = segment_unit(unit)
    if not records:
        raise EmptyInput("unit has no sentences after segmentation")
    sentence_matrix = provider.embed([r.text for r in records], model="symmetric")
    bias_set = _unit_bias_set(unit, records, sentence_matrix, provider, config, ert_queries)
    result = rank(sentence_matrix, bias_set.bias_vectors, guide_matrix, config.rank_config())
    indices = select_top(result, config.k)
    return {
        "unit_id": unit.id,
        "indices": indices,
        "sentences": [records[i].text for i in indices],
        "scores": [float(result.scores[i]) for i in indices],
    }


def run_summarize(config: RunConfig, provider=None) -> list[dict]:
    units = load_units(config.dataset)
    dev, test = split_units(units, config.split, config.seed)
    subset = {"dev": dev, "test": test, "all": units}[config.subset]
    if provider is None:
        provider = make_provider(config.provider, config.cache, config.seed)
    ert_queries = build_ert_queries(dev, provider, config) if config.method == "ert" else None
    guide_matrix = None
    if config.rank_config().beta > 0.0:
        guides = _guide_texts(config, dev)
        if not guides:
            raise EmptyInput(
                "beta > 0 needs guide sentences: give --guide or a dataset whose "
                "development split has references (or set --beta 0)"
            )
        guide_matrix = provider.embed(guides, model="symmetric")
    outputs = []
    for unit in subset:
        try:
            outputs.append(summarize_unit(unit, provider, config, ert_queries, guide_matrix))
        except Exception as exc:  # per-unit failure; the run continues
            outputs.append({"unit_id": unit.id, "error": f"{type(exc).__name__}: {exc}"})
    return outputs


def _write_jsonl(records: list[dict], out: str | None) -> None:
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_summarize(config: RunConfig) -> int:
    _write_jsonl(run_summarize(config), config.out)
    return 0


def cmd_expand(config: RunConfig, method: str) -> int:
    units = load_units(config.dataset)
    dev, test = split_units(units, config.split, config.seed)
    subset = {"dev": dev, "test": test, "all": units}[config.subset]
    provider = make_provider(config.provider, config.cache, config.seed)
    queries: list[Query] = []
    if method == "bq":
        queries = [baseline_query(u) for u in subset]
    elif method == "sentiment-qe":
        for unit in subset:
            records = segment_unit(unit)
            provider.annotate_records(records)
            pool = collect_phrases(records, kinds=("noun", "verb"))
            queries.append(
                prepend_entity(
                    sentiment_qe(
                        unit.sentiment,
                        config.sentiment_phrases,
                        pool,
                        provider,
                        top_k=config.qe_top_k,
                        annotator=provider,
                    ),
                    unit.entity,
                )
            )
    else:
        refs = [u.reference for u in dev if u.reference]
        if not refs:
            raise EmptyInput("the development split has no reference summaries to mine")
        if config.term_source == "documents":
            source_texts = [r.text for unit in dev for r in segment_unit(unit)]
        else:
            source_texts = refs
        if method == "frw":
            queries = [frw_query(source_texts, config.n_terms, annotator=provider)]
        elif method == "frp":
            queries = [frp_query(source_texts, config.n_terms, annotator=provider)]
        else:
            ert = build_ert_queries(dev, provider, config)
            by_label = {q.label: q for q in ert}
            queries = ert if method == "ert" else [by_label[method]]
    _write_jsonl(
        [
            {"label": q.label, "terms": list(q.terms), "entity_prepended": q.entity_prepended}
            for q in queries
        ],
        config.out,
    )
    return 0


def _load_predictions(path: str) -> dict[str, str]:
    predictions = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        if "error" in record:
            continue
        predictions[record["unit_id"]] = " ".join(record["sentences"])
    return predictions


def cmd_evaluate(config: RunConfig, predictions_path: str) -> int:
    units = load_units(config.dataset)
    report = evaluate_run(_load_predictions(predictions_path), units, config.metrics)
    _write_json(report.to_dict(), config.out)
    if config.table:
        print(report.table())
    return 0


def cmd_oracle(config: RunConfig) -> int:
    units = load_units(config.dataset)
    per_unit = []
    omitted = []
    sums: dict[str, float] = {m: 0.0 for m in config.metrics}
    for unit in units:
        if unit.reference is None:
            omitted.append(unit.id)
            continue
        sentences = [r.text for r in segment_unit(unit)]
        index, su4 = oracle_upper_bound(unit, sentences)
        scores = score_all(sentences[index], unit.reference, config.metrics)
        for m, s in scores.items():
            sums[m] += s.f1
        per_unit.append(
            {
                "unit_id": unit.id,
                "index": index,
                "sentence": sentences[index],
                "scores": {m: {"precision": s.precision, "recall": s.recall, "f1": s.f1} for m, s in scores.items()},
                "rsu4_f1": su4.f1,
            }
        )
    if not per_unit:
        raise EmptyInput("no units with references; nothing to bound")
    means = {m: sums[m] / len(per_unit) for m in config.metrics}
    payload = {"count": len(per_unit), "omitted": omitted, "mean_f1": means, "per_unit": per_unit}
    _write_json(payload, config.out)
    if config.table:
        print(render_table(["metric", "mean F1"], [[m, f"{v:.4f}"] for m, v in means.items()]))
    return 0


def cmd_ablate(config: RunConfig, alphas: list[float], betas: list[float]) -> int:
    units = load_units(config.dataset)
    _, test = split_units(units, config.split, config.seed)
    subset = {"dev": _, "test": test, "all": units}[config.subset]
    provider = make_provider(config.provider, config.cache, config.seed)
    grid = []
    for alpha, beta in itertools.product(alphas, betas):
        cell_config = replace(config, alpha=alpha, beta=beta)
        records = run_summarize(cell_config, provider=provider)
        predictions = {r["unit_id"]: " ".join(r["sentences"]) for r in records if "error" not in r}
        report = evaluate_run(predictions, subset, config.metrics)
        grid.append(
            {
                "alpha": alpha,
                "beta": beta,
                "count": report.count,
                "mean_f1": {m: report.means[m]["f1"] for m in config.metrics},
            }
        )
    _write_json({"grid": grid}, config.out)
    if config.table:
        headers = ["alpha", "beta"] + [m for m in config.metrics]
        rows = [
            [row["alpha"], row["beta"]] + [f"{row['mean_f1'][m]:.4f}" for m in config.metrics]
            for row in grid
        ]
        print(render_table(headers, rows))
    return 0


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InvalidConfig(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_PARSERS = {
    "alpha": float,
    "beta": float,
    "theta": float,
    "k": int,
    "seed": int,
    "split": float,
    "max_iterations": int,
    "epsilon": float,
    "n_terms": int,
    "per_term_k": int,
    "patterns_per_term": int,
    "qe_top_k": int,
    "per_term_bias": lambda s: s.lower() in ("1", "true", "yes"),
    "table": lambda s: s.lower() in ("1", "true", "yes"),
    "metrics": lambda s: tuple(s.split(",")),
    "queries": lambda s: tuple(s.split(";")),
}


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        raw = _read_config_file(args.config)
        for key, text in raw.items():
            parser = _CONFIG_PARSERS.get(key, str)
            values[key] = parser(text)
    known = {f.name for f in fields(RunConfig)}
    for key, value in vars(args).items():
        if key in known and value is not None:
            values[key] = value
    if "metrics" in values:
        values["metrics"] = tuple(values["metrics"])
    if "queries" in values:
        values["queries"] = tuple(values["queries"])
    unknown = set(values) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**values)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", help="JSON-lines dataset of units")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--k", type=int)
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--provider", help="'stub' or a sidecar base URL")
    parser.add_argument("--cache", help="embedding cache path (JSON-lines)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--split", type=float)
    parser.add_argument("--metrics", type=lambda s: tuple(s.split(",")))
    parser.add_argument("--out")
    parser.add_argument("--subset", choices=("dev", "test", "all"))
    parser.add_argument("--query", action="append", dest="queries")
    parser.add_argument("--guide", help="file of guide sentences, one per line")
    parser.add_argument("--max-iterations", type=int, dest="max_iterations")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--reduction", choices=("sum", "max", "mean", "median"))
    parser.add_argument("--threshold-mode", choices=("raw", "literal"), dest="threshold_mode")
    parser.add_argument("--n-terms", type=int, dest="n_terms")
    parser.add_argument("--per-term-bias", action="store_const", const=True, dest="per_term_bias")
    parser.add_argument("--term-source", choices=("references", "documents"), dest="term_source")
    parser.add_argument("--table", action="store_const", const=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="essrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sum = sub.add_parser("summarize", help="rank sentences and emit predictions")
    _add_common(p_sum)

    p_exp = sub.add_parser("expand", help="build/expand queries and emit them")
    _add_common(p_exp)
    p_exp.add_argument("--expansion", choices=EXPAND_METHODS, default="ert", help="query construction to run")

    p_eval = sub.add_parser("evaluate", help="score a predictions file against references")
    _add_common(p_eval)
    p_eval.add_argument("--predictions", required=True)

    p_oracle = sub.add_parser("oracle", help="extractive upper bound per unit")
    _add_common(p_oracle)

    p_abl = sub.add_parser("ablate", help="alpha/beta grid of summarize+evaluate runs")
    _add_common(p_abl)
    p_abl.add_argument("--alphas", type=lambda s: [float(x) for x in s.split(",")], default=[0.0, 0.1])
    p_abl.add_argument("--betas", type=lambda s: [float(x) for x in s.split(",")], default=[0.0, 0.1, 0.2])

    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        if args.command in ("summarize", "expand", "ablate") and not config.dataset:
            raise InvalidConfig("--dataset is required")
        if args.command in ("evaluate", "oracle") and not config.dataset:
            raise InvalidConfig("--dataset is required")
        if args.command == "summarize":
            return cmd_summarize(config)
        if args.command == "expand":
            return cmd_expand(config, args.expansion)
        if args.command == "evaluate":
            return cmd_evaluate(config, args.predictions)
        if args.command == "oracle":
            return cmd_oracle(config)
        return cmd_ablate(config, args.alphas, args.betas)
    except (EssrankError, OSError, KeyError) as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
