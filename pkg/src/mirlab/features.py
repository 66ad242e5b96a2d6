"""Per-constraint features (54 per row) for a fractional point.

Every feature is computed on the row's original form, i.e. with the row's
own slack column removed, so ``a.(x, v)  <sense>  b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .model import EQ, GE, LE, MipInstance, Point, evaluate_row

SCHEMA_VERSION = "mirlab-features/1"
ZERO_TOL = 1e-9
UPPER_TOL = 1e-6
TOP_FRACTIONS = (0.01, 0.05, 0.10, 0.20)
SUBSETS = ("all", "nonzero", "zero", "at_upper")
STATS = ("mean", "std", "min", "max")

FEATURE_NAMES: tuple[str, ...] = (
    ("rhs", "rhs_nonzero", "slack", "slack_nonzero", "dual", "degree_all", "degree_nonzero", "degree_zero",
     "sense_le", "sense_ge")
    + tuple(f"coef_{st}_{sub}" for sub in SUBSETS for st in STATS)
    + tuple(f"ratio_{st}_{sub}" for sub in SUBSETS for st in STATS)
    + ("euclidean_distance", "relative_violation", "adjusted_distance", "objective_parallelism")
    + tuple(f"cost_{st}" for st in STATS)
    + tuple(f"top_cost_{int(q * 100)}pct" for q in TOP_FRACTIONS)
)
NUM_FEATURES = len(FEATURE_NAMES)
assert NUM_FEATURES == 54


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    row: int
    round: int = 0
    instance_id: str = ""

    def __post_init__(self):
        if self.values.shape != (NUM_FEATURES,):
            raise ShapeError(f"expected {NUM_FEATURES} features, got {self.values.shape}")


def _stats(vals: np.ndarray) -> list[float]:
    if vals.size == 0:
        return [0.0, 0.0, 0.0, 0.0]
    return [float(vals.mean()), float(vals.std()), float(vals.min()), float(vals.max())]


def _cost_thresholds(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    mag = np.abs(cost)
    top = mag.max(initial=0.0)
    if top == 0:
        return None
    norm = mag / top
    return norm, np.array([np.quantile(norm, 1.0 - q) for q in TOP_FRACTIONS])


def compute_features(
    instance: MipInstance,
    point: Point,
    duals: np.ndarray | object,
    row: int,
    round_index: int = 0,
    instance_id: str = "",
) -> FeatureVector:
    """Feature vector for standard-form row ``row`` at ``point``.

    ``duals`` is an LP solution (anything with a ``duals`` attribute) or a
    dual vector whose first ``m`` entries belong to the instance rows.
    """
    if not 0 <= row < instance.m:
        raise ShapeError(f"row {row} is not an original row (m={instance.m})")
    duals = np.asarray(getattr(duals, "duals", duals), dtype=float)
    view = evaluate_row(instance, row, point, duals)
    a = np.concatenate([view.coef_x, view.coef_v])
    z = point.stacked()
    upper = np.concatenate([instance.int_upper, instance.cont_upper])
    cost = instance.cost
    b = view.rhs

    support = np.abs(a) > 0
    nonzero_at = np.abs(z) > ZERO_TOL
    at_upper = np.isfinite(upper) & (np.abs(z - upper) <= UPPER_TOL)
    masks = {
        "all": support,
        "nonzero": support & nonzero_at,
        "zero": support & ~nonzero_at,
        "at_upper": support & at_upper,
    }

    feats: list[float] = [b, float(b != 0), view.slack, float(abs(view.slack) > ZERO_TOL), float(view.dual)]
    feats += [float(masks[k].sum()) for k in ("all", "nonzero", "zero")]
    feats += {LE: [1.0, 0.0], GE: [0.0, 1.0], EQ: [1.0, 1.0]}[view.sense]
    for sub in SUBSETS:
        feats += _stats(a[masks[sub]])
    for sub in SUBSETS:
        feats += _stats(a[masks[sub]] / b) if b != 0 else [0.0] * 4

    gap = view.activity - b
    norm = float(np.linalg.norm(a))
    feats.append(abs(gap) / norm if norm > 0 else 0.0)
    if b == 0:
        rel = 0.0
    elif view.sense == LE:
        rel = gap / abs(b)
    elif view.sense == GE:
        rel = -gap / abs(b)
    else:
        rel = abs(gap) / abs(b)
    feats.append(rel)
    int_norm = float(np.linalg.norm(view.coef_x))
    feats.append(abs(gap) / int_norm if int_norm > 0 else 0.0)
    cnorm = float(np.linalg.norm(cost))
    feats.append(abs(float(cost @ a)) / (cnorm * norm) if cnorm > 0 and norm > 0 else 0.0)

    feats += _stats(cost[support])
    thresholds = _cost_thresholds(cost)
    if thresholds is None:
        feats += [0.0] * len(TOP_FRACTIONS)
    else:
        normalized, cuts = thresholds
        feats += [float(np.sum(support & (normalized >= t) & (normalized > 0))) for t in cuts]

    return FeatureVector(np.array(feats, dtype=float), row, round_index, instance_id)


def compute_all_features(
    instance: MipInstance, point: Point, duals, round_index: int = 0, instance_id: str = ""
) -> list[FeatureVector]:
    return [compute_features(instance, point, duals, j, round_index, instance_id) for j in range(instance.m)]
