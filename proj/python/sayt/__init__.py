"""Selective search triggering for instant search."""

import json

from ._core import (
    InputError,
    Retriever,
    average_precision,
    build_index,
    compare_json,
    cosine_distance,
    default_stopwords,
    generate_synthetic,
    paired_t_test,
    reward_of,
    simulate,
    tokenize,
    train,
)
from ._core import evaluate_json as _evaluate_json

__all__ = [
    "InputError",
    "Retriever",
    "average_precision",
    "build_index",
    "compare",
    "cosine_distance",
    "default_stopwords",
    "evaluate",
    "generate_synthetic",
    "paired_t_test",
    "reward_of",
    "simulate",
    "tokenize",
    "train",
]

__version__ = "0.1.0"


def evaluate(policy, retriever, queries, qrels, **kwargs):
    """Run a policy over a query set and return the report as a dict."""
    return json.loads(_evaluate_json(policy, retriever, str(queries), str(qrels), **kwargs))


def compare(base, other):
    """Compare two report.json files; the first is the baseline."""
    return compare_json(str(base), str(other))
