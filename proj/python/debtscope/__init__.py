"""Python bindings for the debtscope core."""

import json

from . import _core
from ._core import ArgumentError, Error, cohens_kappa, preprocess, sample_size, strategies

__all__ = [
    "ArgumentError",
    "Error",
    "cohens_kappa",
    "explain",
    "filter_texts",
    "generate_synthetic",
    "metrics",
    "predict",
    "preprocess",
    "replay",
    "run_command",
    "sample_size",
    "simulate",
    "strategies",
    "train",
]


def filter_texts(texts, keywords, threshold=0.9, ngrams=(1, 2, 3), dimension=4096):
    return json.loads(_core.filter_texts(list(texts), list(keywords), threshold, list(ngrams), dimension))


def metrics(predicted, gold, positive=1):
    return json.loads(_core.metrics(list(predicted), list(gold), positive))


def generate_synthetic(num_docs=3000, seed=7):
    return json.loads(_core.generate_synthetic(num_docs, seed))


def train(texts, labels, kind="logistic", **spec):
    spec = {"kind": kind, **spec}
    return json.loads(_core.train(list(texts), list(labels), json.dumps(spec)))


def predict(model, texts):
    return _core.predict(json.dumps(model), list(texts))


def explain(model, text, method="lime", config=None):
    return json.loads(_core.explain(json.dumps(model), text, method, json.dumps(config or {})))


def simulate(texts, labels, **config):
    return json.loads(_core.simulate(json.dumps(config), list(texts), list(labels)))


def run_command(command, **config):
    return json.loads(_core.run_command(command, json.dumps(config)))


def replay(manifest):
    return json.loads(_core.replay(str(manifest)))
