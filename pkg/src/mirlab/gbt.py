"""Gradient-boosted regression trees for binary classification (logistic loss).

Each round fits a least-squares regression tree to the negative gradient
``y - p`` (exact greedy splits at midpoints of consecutive distinct values)
and adds ``learning_rate`` times the tree to the raw score.  Leaves hold the
mean residual of their samples.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch, SingleClassDataset
from .features import SCHEMA_VERSION

MODEL_FORMAT = "mirlab-gbt/1"


@dataclass(frozen=True)
class GbtParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 5
    min_samples_split: int = 2
    min_samples_leaf: int = 1


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.left[i] < 0:
                return 0
            return 1 + max(walk(int(self.left[i])), walk(int(self.right[i])))

        return walk(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            internal = self.left[node] >= 0
            if not internal.any():
                return self.value[node]
            f = np.where(internal, self.feature[node], 0)
            go_left = X[rows, f] < self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, nxt, node)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            np.array(d["feature"], dtype=int),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=int),
            np.array(d["right"], dtype=int),
            np.array(d["value"], dtype=float),
        )


@dataclass
class GbtModel:
    trees: list[Tree]
    learning_rate: float
    init: float
    max_depth: int
    n_features: int
    schema: str = SCHEMA_VERSION
    params: GbtParams = field(default_factory=GbtParams)
    single_class: bool = False

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        score = np.full(X.shape[0], self.init)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "schema": self.schema,
            "n_features": self.n_features,
            "hyperparams": vars(self.params),
            "learning_rate": self.learning_rate,
            "init": self.init,
            "max_depth": self.max_depth,
            "single_class": self.single_class,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> GbtModel:
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise SchemaMismatch(f"unknown model format {doc.get('format')!r}")
        return cls(
            trees=[Tree.from_dict(t) for t in doc["trees"]],
            learning_rate=float(doc["learning_rate"]),
            init=float(doc["init"]),
            max_depth=int(doc["max_depth"]),
            n_features=int(doc["n_features"]),
            schema=doc["schema"],
            params=GbtParams(**doc["hyperparams"]),
            single_class=bool(doc.get("single_class", False)),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> GbtModel:
        return cls.from_json(Path(path).read_text())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(y: np.ndarray, score: np.ndarray) -> float:
    # log(1 + e^s) - y s, stable form
    return float(np.mean(np.logaddexp(0.0, score) - y * score))


def _best_split(X, r, idx, min_leaf):
    n = idx.size
    total = r[idx].sum()
    base = total * total / n
    best_gain, best = 1e-12, None
    for f in range(X.shape[1]):
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        rs = r[idx][order]
        csum = np.cumsum(rs)[:-1]
        nl = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (n - nl >= min_leaf)
        if not valid.any():
            continue
        gain = csum**2 / nl + (total - csum) ** 2 / (n - nl) - base
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            thr = xs[k] + (xs[k + 1] - xs[k]) / 2.0
            if not xs[k] < thr <= xs[k + 1]:
                thr = xs[k + 1]
            best_gain, best = gain[k], (f, thr)
    return best


def _fit_tree(X: np.ndarray, r: np.ndarray, params: GbtParams) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def add_node(idx: np.ndarray, depth: int) -> int:
        nid = len(value)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(r[idx].mean()))
        if depth >= params.max_depth or idx.size < params.min_samples_split:
            return nid
        split = _best_split(X, r, idx, params.min_samples_leaf)
        if split is None:
            return nid
        f, thr = split
        mask = X[idx, f] < thr
        feature[nid] = f
        threshold[nid] = float(thr)
        left[nid] = add_node(idx[mask], depth + 1)
        right[nid] = add_node(idx[~mask], depth + 1)
        return nid

    add_node(np.arange(X.shape[0]), 0)
    return Tree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=float),
    )


def fit_gbt(
    X: np.ndarray,
    y: np.ndarray,
    params: GbtParams | None = None,
    schema: str = SCHEMA_VERSION,
    loss_trace: list[float] | None = None,
) -> GbtModel:
    """Fit on a feature matrix; deterministic for a fixed row order.

    Constant labels produce a zero-tree model at the clipped prior and a
    ``SingleClassDataset`` warning.
    """
    params = params or GbtParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D array with one label per row")
    prior = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
    init = math.log(prior / (1 - prior))
    model = GbtModel([], params.learning_rate, init, params.max_depth, X.shape[1], schema, params)
    if np.all(y == y[0]):
        warnings.warn("labels are constant; returning a constant-probability model", SingleClassDataset)
        model.single_class = True
        return model
    score = np.full(X.shape[0], init)
    if loss_trace is not None:
        loss_trace.append(logistic_loss(y, score))
    for _ in range(params.n_estimators):
        resid = y - _sigmoid(score)
        tree = _fit_tree(X, resid, params)
        model.trees.append(tree)
        score += params.learning_rate * tree.predict(X)
        if loss_trace is not None:
            loss_trace.append(logistic_loss(y, score))
    return model
