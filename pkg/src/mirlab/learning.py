"""Labels, train/test splitting, evaluation, and the row selector used by the loop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import ConfigError, SchemaMismatch
from .features import NUM_FEATURES, SCHEMA_VERSION, FeatureVector
from .gbt import GbtModel, GbtParams, fit_gbt

LABEL_EPSILON = 1e-6
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: int
    instance_id: str = ""
    round: int = 0

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


def label_round(pool: Iterable, m: int, epsilon: float = LABEL_EPSILON) -> np.ndarray:
    """1 for every row whose multiplier exceeds ``epsilon`` in any pool member.

    Pool members may be separation solutions or cuts; both expose ``lam``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    labels = np.zeros(m, dtype=int)
    for item in pool:
        lam = np.asarray(item.lam, dtype=float)
        if lam.shape != (m,):
            raise ValueError(f"multiplier vector has shape {lam.shape}, expected ({m},)")
        labels |= (np.abs(lam) > epsilon).astype(int)
    return labels


def feature_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    if not features:
        return np.zeros((0, NUM_FEATURES))
    return np.vstack([fv.values for fv in features])


def train_gbt(dataset: Sequence[LabeledSample], params: GbtParams | None = None) -> GbtModel:
    if not dataset:
        raise ValueError("dataset is empty")
    X = feature_matrix([s.features for s in dataset])
    y = np.array([s.label for s in dataset])
    return fit_gbt(X, y, params)


def predict_useful(model: GbtModel, features: Sequence[FeatureVector], threshold: float = DEFAULT_THRESHOLD) -> set[int]:
    """Rows whose predicted probability is at least ``threshold``."""
    if model.schema != SCHEMA_VERSION:
        raise SchemaMismatch(f"model schema {model.schema!r} != {SCHEMA_VERSION!r}")
    if not features:
        return set()
    proba = model.predict_proba(feature_matrix(features))
    return {fv.row for fv, p in zip(features, proba) if p >= threshold}


class RowSelector(Protocol):
    def select_rows(self, features: Sequence[FeatureVector]) -> set[int]: ...


@dataclass
class GbtSelector:
    model: GbtModel
    threshold: float = DEFAULT_THRESHOLD

    def select_rows(self, features: Sequence[FeatureVector]) -> set[int]:
        return predict_useful(self.model, features, self.threshold)


@dataclass
class ConstantSelector:
    """Predicts every row useful (``positive=True``) or none."""

    positive: bool = True

    def select_rows(self, features: Sequence[FeatureVector]) -> set[int]:
        return {fv.row for fv in features} if self.positive else set()


@dataclass
class FixedSelector:
    rows: frozenset[int]

    def select_rows(self, features: Sequence[FeatureVector]) -> set[int]:
        return set(self.rows)


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    @property
    def precision(self) -> float | None:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> float | None:
        d = self.tp + self.fn
        return self.tp / d if d else None

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> EvalReport:
        y_true = np.asarray(y_true, dtype=int)
        y_pred = np.asarray(y_pred, dtype=int)
        return cls(
            int(np.sum((y_true == 1) & (y_pred == 1))),
            int(np.sum((y_true == 0) & (y_pred == 1))),
            int(np.sum((y_true == 1) & (y_pred == 0))),
            int(np.sum((y_true == 0) & (y_pred == 0))),
        )


def evaluate(model: GbtModel, dataset: Sequence[LabeledSample], threshold: float = DEFAULT_THRESHOLD) -> EvalReport:
    if not dataset:
        raise ValueError("dataset is empty")
    X = feature_matrix([s.features for s in dataset])
    y = np.array([s.label for s in dataset])
    return EvalReport.from_predictions(y, model.predict(X, threshold))


def split_variations(ids: Iterable[str], test_fraction: float = 0.2, seed: int = 0) -> tuple[list[str], list[str]]:
    """Seeded per-variation split; every variation lands wholly on one side."""
    if not 0 < test_fraction < 1:
        raise ConfigError("test fraction must lie in (0, 1)")
    unique = sorted(set(ids))
    if len(unique) < 2:
        raise ConfigError(f"need at least 2 variations to split, got {len(unique)}")
    order = np.random.default_rng(seed).permutation(len(unique))
    n_test = min(len(unique) - 1, max(1, int(round(test_fraction * len(unique)))))
    test = sorted(unique[i] for i in order[:n_test])
    train = sorted(unique[i] for i in order[n_test:])
    return train, test
