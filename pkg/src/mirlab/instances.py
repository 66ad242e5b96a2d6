"""Instance families from objective perturbation, plus small synthetic base instances."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .bnb import lp_relaxation
from .errors import ConfigError, ExhaustedDraws
from .model import GeneralMip, MipInstance, to_standard_form

FINGERPRINT_GRID = 1e-7
MANIFEST_FORMAT = "mirlab-family/1"


@dataclass(frozen=True)
class PerturbationConfig:
    """Normal draws per sign pool; ``None`` moments default to the base objective's pool moments."""

    seed: int = 0
    count: int = 1
    pos_mean: float | None = None
    pos_std: float | None = None
    neg_mean: float | None = None
    neg_std: float | None = None

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError("count must be >= 0")
        for s in (self.pos_std, self.neg_std):
            if s is not None and s < 0:
                raise ConfigError("standard deviations must be >= 0")

    def moments(self, d: np.ndarray) -> tuple[float, float, float, float]:
        pos, neg = d[d > 0], d[d < 0]

        def pick(given, pool, fn):
            if given is not None:
                return float(given)
            return float(fn(pool)) if pool.size else 0.0

        return (
            pick(self.pos_mean, pos, np.mean),
            pick(self.pos_std, pos, np.std),
            pick(self.neg_mean, neg, np.mean),
            pick(self.neg_std, neg, np.std),
        )


def perturb_objective(base: MipInstance, config: PerturbationConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """New cost vector ``[f; g]`` that keeps each entry's sign (zeros stay zero).

    Positive entries become ``max(0, u)``, ``u ~ N(pos_mean, pos_std)``;
    negative entries ``min(0, u)``, ``u ~ N(neg_mean, neg_std)``.  Draws are
    taken in column order, positives and negatives interleaved as they occur.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    d = base.cost
    mu_p, sd_p, mu_n, sd_n = config.moments(d)
    out = np.zeros_like(d)
    for i, val in enumerate(d):
        if val > 0:
            out[i] = max(0.0, rng.normal(mu_p, sd_p))
        elif val < 0:
            out[i] = min(0.0, rng.normal(mu_n, sd_n))
    return out


def lp_fingerprint(x: np.ndarray) -> str:
    grid = np.round(np.asarray(x, dtype=float) / FINGERPRINT_GRID).astype(np.int64)
    return hashlib.sha1(grid.tobytes()).hexdigest()[:16]


@dataclass
class Variation:
    index: int
    objective: np.ndarray
    fingerprint: str
    draw: int

    def instance(self, base: MipInstance) -> MipInstance:
        return base.with_objective(self.objective[: base.n], self.objective[base.n :], name=f"{base.name}_v{self.index:04d}")


@dataclass
class InstanceFamily:
    base: MipInstance
    config: PerturbationConfig
    variations: list[Variation] = field(default_factory=list)

    def instances(self) -> list[MipInstance]:
        return [v.instance(self.base) for v in self.variations]


def draw_rng(seed: int, draw: int) -> np.random.Generator:
    """Independent stream per draw index, so draws can run in any order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(draw,)))


def generate_family(base: MipInstance, config: PerturbationConfig, require_distinct_lp: bool = True) -> InstanceFamily:
    family = InstanceFamily(base, config)
    seen: set[str] = set()
    cap = 100 * config.count
    draw = 0
    while len(family.variations) < config.count:
        if draw >= cap:
            raise ExhaustedDraws(f"only {len(family.variations)} of {config.count} distinct LP optima after {cap} draws")
        d = perturb_objective(base, config, draw_rng(config.seed, draw))
        inst = base.with_objective(d[: base.n], d[base.n :])
        sol = lp_relaxation(inst)
        draw += 1
        if not sol.optimal:
            continue
        fp = lp_fingerprint(sol.x)
        if require_distinct_lp and fp in seen:
            continue
        seen.add(fp)
        family.variations.append(Variation(len(family.variations), d, fp, draw - 1))
    return family


def filter_by_gap(final_gaps: dict[int, float | None], min_gap_pct: float = 5.0) -> tuple[list[int], list[int]]:
    """Split variation ids by final gap closed (``>=`` keeps; degenerate gaps are discarded)."""
    kept, discarded = [], []
    for vid in sorted(final_gaps):
        g = final_gaps[vid]
        (kept if g is not None and g >= min_gap_pct else discarded).append(vid)
    return kept, discarded


def filter_family(
    family: InstanceFamily, run: Callable[[MipInstance], list], min_gap_pct: float = 5.0
) -> tuple[list[int], list[int]]:
    """Run ``run`` (a full-separator loop) on every variation and split by final gap."""
    gaps = {}
    for v in family.variations:
        traces = run(v.instance(family.base))
        gaps[v.index] = traces[-1].gap_closed if traces else None
    return filter_by_gap(gaps, min_gap_pct)


def manifest_dict(family: InstanceFamily, base_path: str = "") -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "base": base_path,
        "base_name": family.base.name,
        "seed": family.config.seed,
        "perturbation": asdict(family.config),
        "variations": [
            {"id": v.index, "draw": v.draw, "fingerprint": v.fingerprint, "objective": v.objective.tolist()}
            for v in family.variations
        ],
    }


def write_manifest(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MANIFEST_FORMAT:
        raise ConfigError(f"{path}: not a family manifest")
    return doc


# ----------------------------------------------------------------------------
# synthetic instances


def knapsack2() -> GeneralMip:
    """``min -x1 - x2  s.t. 2 x1 + 2 x2 <= 3``, x integer: z_LP = -1.5, z_I = -1."""
    return GeneralMip(obj=[-1.0, -1.0], A=[[2.0, 2.0]], senses=["L"], rhs=[3.0], integer=[True, True], name="knapsack2")


def random_tiny_mip(rng: np.random.Generator, max_int: int = 4, max_cont: int = 2, max_rows: int = 3) -> GeneralMip:
    """Small bounded MIP with a known feasible lattice point.

    Every variable has a finite upper bound; rows are built around a random
    point so the instance is feasible.
    """
    n = int(rng.integers(1, max_int + 1))
    pc = int(rng.integers(0, max_cont + 1))
    rows = int(rng.integers(1, max_rows + 1))
    N = n + pc
    integer = np.arange(N) < n
    upper = rng.integers(1, 4, size=N).astype(float)
    A = rng.integers(-2, 7, size=(rows, N)).astype(float)
    A[rng.random((rows, N)) < 0.25] = 0.0
    x0 = np.where(integer, rng.integers(0, upper + 1), rng.random(N) * upper)
    act = A @ x0
    senses = rng.choice(["L", "G", "E"], size=rows, p=[0.7, 0.15, 0.15])
    rhs = np.where(senses == "L", np.floor(act) + rng.integers(0, 3, size=rows) + 0.5 * rng.integers(0, 2, size=rows),
                   np.where(senses == "G", np.floor(act) - rng.integers(0, 2, size=rows), act))
    rhs = np.where((senses == "L") & (rhs < act), act, rhs)
    obj = rng.integers(-6, 4, size=N).astype(float)
    return GeneralMip(obj=obj, A=A, senses=list(senses), rhs=rhs, integer=integer, upper=upper, name="tiny")


def synthetic_base(seed: int = 0, n_int: int = 5, n_cont: int = 1, n_rows: int = 3, name: str | None = None) -> GeneralMip:
    """Packing-style mixed-integer base: positive rows, integer bounds 2-3, bounded continuous part."""
    rng = np.random.default_rng(seed)
    N = n_int + n_cont
    A = rng.integers(2, 9, size=(n_rows, N)).astype(float)
    A[rng.random((n_rows, N)) < 0.2] = 0.0
    upper = np.concatenate([rng.integers(2, 4, size=n_int), np.full(n_cont, 2.0)]).astype(float)
    rhs = np.floor(0.45 * (A @ upper)) + 0.5
    obj = -rng.integers(3, 12, size=N).astype(float)
    obj[n_int:] = -rng.integers(1, 4, size=n_cont)
    integer = np.arange(N) < n_int
    return GeneralMip(obj=obj, A=A, senses=["L"] * n_rows, rhs=rhs, integer=integer, upper=upper,
                      name=name or f"synth{seed}")


def standard(general: GeneralMip) -> MipInstance:
    return to_standard_form(general)
