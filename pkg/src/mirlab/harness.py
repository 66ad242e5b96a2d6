"""Experiment pipeline: generate a family, train the row classifier, compare separators, report.

Every artifact is a CSV whose first line is a ``#`` comment carrying the
schema string and the root seed, followed by a normal header row.  Floats are
written with ``repr`` so they read back bit for bit.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, SchemaMismatch, SingleClassDataset
from .features import FEATURE_NAMES, SCHEMA_VERSION
from .gbt import GbtModel, GbtParams, fit_gbt
from .instances import (
    PerturbationConfig,
    filter_by_gap,
    generate_family,
    manifest_dict,
    read_manifest,
    write_manifest,
)
from .learning import EvalReport, GbtSelector, RowSelector, split_variations
from .loop import LoopConfig, RoundTrace, final_gap, integer_optimum, run_cutting_loop
from .model import MipInstance, to_standard_form
from .mps import parse_mps
from .separation import SeparationConfig

log = logging.getLogger(__name__)

TRACE_SCHEMA = "mirlab-trace/1"
DATASET_SCHEMA = "mirlab-dataset/1"
EVAL_SCHEMA = "mirlab-eval/1"
COMPARE_SCHEMA = "mirlab-compare/1"
REPORT_SCHEMA = "mirlab-report/1"
SUMMARY_SCHEMA = "mirlab-summary/1"
SPLIT_FORMAT = "mirlab-split/1"
DEGENERATE = "Degenerate"
UNDEFINED = "Undefined"
BUILTIN_PREFIX = "builtin:"

TRACE_COLUMNS = (
    "variation", "separator", "round", "cuts_added", "z", "z_lp", "z_int", "gap_closed",
    "n_allowed", "allowed_rows", "useful_rows", "sep_time", "sep_objective", "reason",
)
DATASET_COLUMNS = ("instance_id", "variation", "round", "row", "kept", "label") + FEATURE_NAMES
EVAL_COLUMNS = ("side", "variations", "samples", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "single_class")
COMPARE_COLUMNS = (
    "variation", "side", "separator", "round", "gap_closed", "cuts_added", "n_allowed",
    "wall_time", "reason", "z", "support_superset",
)
REPORT_COLUMNS = ("side", "separator", "round", "survivors", "gap_n", "gap_mean", "gap_std")
SUMMARY_COLUMNS = ("side", "separator", "variations", "final_gap_n", "final_gap_mean", "final_gap_std", "mean_rounds")


# ----------------------------------------------------------------------------
# CSV plumbing


@dataclass
class CsvTable:
    schema: str
    meta: dict[str, str]
    header: list[str]
    rows: list[dict[str, str]]

    def column(self, name: str) -> list[str]:
        return [r[name] for r in self.rows]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, schema: str, meta: dict, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tags = " ".join(f"{k}={fmt(v)}" for k, v in [("schema", schema), *sorted(meta.items())])
    with path.open("w", newline="") as fh:
        fh.write(f"# {tags}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([fmt(v) for v in row])


def read_csv(path: str | Path, schema: str | None = None) -> CsvTable:
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise SchemaMismatch(f"{path}: missing schema comment line")
        meta = dict(tok.split("=", 1) for tok in first[1:].split() if "=" in tok)
        found = meta.pop("schema", "")
        if schema is not None and found != schema:
            raise SchemaMismatch(f"{path}: schema {found!r}, expected {schema!r}")
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = [dict(zip(header, r)) for r in reader]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise SchemaMismatch(f"{path}: data row {i + 1} has the wrong number of fields")
    return CsvTable(found, meta, header, rows)


def parse_gap(text: str) -> float | None:
    return None if text in (DEGENERATE, "") else float(text)


def _rows_text(rows: Iterable[int]) -> str:
    return " ".join(str(j) for j in sorted(rows))


def _rows_parse(text: str) -> frozenset[int]:
    return frozenset(int(t) for t in text.split())


# ----------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    base: str | None = None
    out: Path = Path("mirlab-out")
    family_size: int = 20
    seed: int = 0
    sep_time_limit: float = 600.0
    loop_time_limit: float = 3 * 3600.0
    max_rounds: int | None = None
    node_limit: int | None = 2000
    min_gap: float = 5.0
    split: float = 0.2
    threshold: float = 0.5
    workers: int = 1
    K: int = 6
    lambda_bound: float = 1.0
    pos_mean: float | None = None
    pos_std: float | None = None
    neg_mean: float | None = None
    neg_std: float | None = None
    gbt: GbtParams = field(default_factory=GbtParams)

    def __post_init__(self):
        object.__setattr__(self, "out", Path(self.out))
        if self.family_size < 0:
            raise ConfigError("family size must be >= 0")
        if not 0 < self.split < 1:
            raise ConfigError("split fraction must lie in (0, 1)")
        if not 0 <= self.threshold <= 1:
            raise ConfigError("threshold must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.min_gap < 0:
            raise ConfigError("min gap must be >= 0")
        if not (self.sep_time_limit > 0 and self.loop_time_limit > 0):
            raise ConfigError("time limits must be positive")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigError("max rounds must be >= 1")
        if self.node_limit is not None and self.node_limit < 1:
            raise ConfigError("node limit must be >= 1")

    def loop_config(self, classifier: RowSelector | None = None, record: bool = False, instance_id: str = "") -> LoopConfig:
        sep = SeparationConfig(K=self.K, lambda_bound=self.lambda_bound, time_limit=self.sep_time_limit,
                               node_limit=self.node_limit)
        return LoopConfig(max_wall_time=self.loop_time_limit, sep_time_limit=self.sep_time_limit,
                          max_rounds=self.max_rounds, classifier=classifier, separation=sep,
                          record_features=record, instance_id=instance_id)

    def perturbation(self) -> PerturbationConfig:
        return PerturbationConfig(self.seed, self.family_size, self.pos_mean, self.pos_std, self.neg_mean, self.neg_std)

    def settings(self) -> dict:
        d = asdict(self)
        d["out"] = str(self.out)
        return d


def resolve_base(base: str | Path) -> Path:
    """Path to the base MPS file; ``builtin:NAME`` picks a bundled fixture."""
    text = str(base)
    if text.startswith(BUILTIN_PREFIX):
        name = text[len(BUILTIN_PREFIX):]
        ref = resources.files("mirlab") / "data" / f"{name}.mps"
        if not ref.is_file():
            raise ConfigError(f"no bundled instance named {name!r}")
        return Path(str(ref))
    return Path(text)


def load_base(base: str | Path) -> MipInstance:
    return to_standard_form(parse_mps(resolve_base(base)))


def variation_id(index: int) -> str:
    return f"v{index:04d}"


def trace_path(out: Path, index: int) -> Path:
    return out / "traces" / f"full_{variation_id(index)}.csv"


# ----------------------------------------------------------------------------
# per-variation work (module level so worker processes can pickle it)


@dataclass
class VariationTask:
    base: MipInstance
    index: int
    objective: np.ndarray
    config: ExperimentConfig
    model_json: str | None = None
    z_int: float | None = None


@dataclass
class VariationResult:
    index: int
    traces: list[RoundTrace] = field(default_factory=list)
    z_int: float | None = None
    error: str | None = None

    @property
    def final_gap(self) -> float | None:
        return final_gap(self.traces)


def run_variation(task: VariationTask) -> VariationResult:
    vid = variation_id(task.index)
    try:
        inst = task.base.with_objective(task.objective[: task.base.n], task.objective[task.base.n:],
                                        name=f"{task.base.name}_{vid}")
        z_i = integer_optimum(inst) if task.z_int is None else task.z_int
        if task.model_json is None:
            cfg = task.config.loop_config(record=True, instance_id=vid)
        else:
            selector = GbtSelector(GbtModel.from_json(task.model_json), task.config.threshold)
            cfg = task.config.loop_config(classifier=selector, instance_id=vid)
        return VariationResult(task.index, run_cutting_loop(inst, cfg, z_int=z_i), z_i)
    except Exception as exc:  # surfaced per variation, never aborts the batch
        log.warning("variation %s failed: %s", vid, exc)
        return VariationResult(task.index, error=f"{type(exc).__name__}: {exc}")


def run_batch(tasks: list[VariationTask], workers: int) -> list[VariationResult]:
    if workers <= 1 or len(tasks) <= 1:
        return [run_variation(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_variation, tasks))


def trace_rows(index: int, separator: str, traces: list[RoundTrace]) -> list[list]:
    rows = []
    for t in traces:
        useful = () if t.labels is None else np.flatnonzero(t.labels)
        rows.append([
            variation_id(index), separator, t.round, t.cuts_added, t.z, t.z_lp, t.z_int,
            DEGENERATE if t.gap_closed is None else t.gap_closed,
            len(t.allowed_rows), _rows_text(t.allowed_rows), _rows_text(useful),
            t.sep_time, t.sep_objective, t.reason.value if t.reason else "",
        ])
    return rows


def dataset_rows(index: int, traces: list[RoundTrace], kept: bool) -> list[list]:
    rows = []
    for t in traces:
        if t.features is None or t.labels is None:
            continue
        for fv in t.features:
            rows.append([fv.instance_id, variation_id(index), t.round, fv.row, kept, int(t.labels[fv.row]),
                         *fv.values.tolist()])
    return rows


# ----------------------------------------------------------------------------
# subcommands


def cmd_generate(config: ExperimentConfig) -> dict:
    """Build the family, run the full separator on every variation, write traces, dataset and manifest."""
    if config.base is None:
        raise ConfigError("--base is required")
    base_path = resolve_base(config.base)
    base = load_base(base_path)
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    family = generate_family(base, config.perturbation())
    tasks = [VariationTask(base, v.index, v.objective, config) for v in family.variations]
    results = run_batch(tasks, config.workers)

    failed = {r.index: r.error for r in results if r.error}
    gaps = {r.index: r.final_gap for r in results if not r.error}
    kept, discarded = filter_by_gap(gaps, config.min_gap)
    kept_set = set(kept)
    meta = {"seed": config.seed, "features": SCHEMA_VERSION}
    data = []
    for r in results:
        if r.error:
            continue
        write_csv(trace_path(out, r.index), TRACE_SCHEMA, meta, TRACE_COLUMNS, trace_rows(r.index, "full", r.traces))
        data.extend(dataset_rows(r.index, r.traces, r.index in kept_set))
    write_csv(out / "dataset.csv", DATASET_SCHEMA, meta, DATASET_COLUMNS, data)

    doc = manifest_dict(family, str(base_path.resolve()))
    by_id = {r.index: r for r in results}
    for v in doc["variations"]:
        r = by_id[v["id"]]
        v["name"] = variation_id(v["id"])
        v["z_int"] = r.z_int
        v["z_lp"] = r.traces[0].z_lp if r.traces else None
        v["final_gap"] = r.final_gap
        v["rounds"] = len(r.traces)
        v["status"] = "failed" if r.error else ("kept" if v["id"] in kept_set else "discarded")
    doc["kept"] = kept
    doc["discarded"] = discarded
    doc["failed"] = [{"id": i, "error": failed[i]} for i in sorted(failed)]
    doc["settings"] = config.settings()
    write_manifest(out / "manifest.json", doc)
    return doc


def cmd_train(dataset_path: str | Path, config: ExperimentConfig) -> dict:
    """Split kept variations, fit the classifier, write model, split and train/test metrics."""
    table = read_csv(dataset_path, DATASET_SCHEMA)
    if table.meta.get("features") != SCHEMA_VERSION:
        raise SchemaMismatch(f"dataset feature schema {table.meta.get('features')!r} != {SCHEMA_VERSION!r}")
    rows = [r for r in table.rows if r["kept"] == "1"]
    train_ids, test_ids = split_variations([r["variation"] for r in rows], config.split, config.seed)
    sides = {"train": set(train_ids), "test": set(test_ids)}

    def matrix(ids: set[str]) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in rows if r["variation"] in ids]
        X = np.array([[float(r[name]) for name in FEATURE_NAMES] for r in sel]).reshape(len(sel), len(FEATURE_NAMES))
        y = np.array([int(r["label"]) for r in sel], dtype=int)
        return X, y

    X, y = matrix(sides["train"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassDataset)
        model = fit_gbt(X, y, config.gbt)
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")
    split_doc = {"format": SPLIT_FORMAT, "seed": config.seed, "fraction": config.split,
                 "train": train_ids, "test": test_ids}
    (out / "split.json").write_text(json.dumps(split_doc, indent=1, sort_keys=True) + "\n")

    reports = {}
    eval_rows = []
    for side in ("train", "test"):
        Xs, ys = matrix(sides[side])
        rep = EvalReport.from_predictions(ys, model.predict(Xs, config.threshold)) if len(ys) else EvalReport(0, 0, 0, 0)
        reports[side] = rep
        metrics = [UNDEFINED if v is None else v for v in (rep.accuracy, rep.precision, rep.recall)]
        eval_rows.append([side, len(sides[side]), len(ys), rep.tp, rep.fp, rep.fn, rep.tn, *metrics, model.single_class])
    write_csv(out / "eval.csv", EVAL_SCHEMA, {"seed": config.seed, "threshold": config.threshold},
              EVAL_COLUMNS, eval_rows)
    return {"model": model, "train": train_ids, "test": test_ids, "reports": reports}


def _sides(manifest: dict, split_doc: dict | None) -> dict[int, str]:
    sides = {}
    train = set(split_doc["train"]) if split_doc else set()
    test = set(split_doc["test"]) if split_doc else set()
    for v in manifest["variations"]:
        name = variation_id(v["id"])
        if v.get("status") == "failed":
            sides[v["id"]] = "failed"
        elif name in test:
            sides[v["id"]] = "test"
        elif name in train:
            sides[v["id"]] = "train"
        elif v.get("status") == "discarded":
            sides[v["id"]] = "discarded"
        else:
            sides[v["id"]] = "unsplit"
    return sides


def cmd_compare(manifest_path: str | Path, model_path: str | Path, config: ExperimentConfig,
                selector_factory: Callable[[GbtModel], RowSelector] | None = None) -> list[list]:
    """Run the reduced loop on every variation and pair it with the stored full-separator traces.

    ``support_superset`` is 1 on a reduced row when the selected rows contain
    every row useful to the full separator in the same round.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    family_dir = manifest_path.parent
    model_path = Path(model_path)
    model = GbtModel.load(model_path)
    split_file = model_path.parent / "split.json"
    split_doc = json.loads(split_file.read_text()) if split_file.is_file() else None
    sides = _sides(manifest, split_doc)
    base = load_base(manifest["base"])
    ok = [v for v in manifest["variations"] if v.get("status") != "failed"]

    full: dict[int, list[dict]] = {}
    for v in ok:
        full[v["id"]] = read_csv(trace_path(family_dir, v["id"]), TRACE_SCHEMA).rows

    if selector_factory is None:
        tasks = [VariationTask(base, v["id"], np.array(v["objective"]), config, model.to_json(), v["z_int"]) for v in ok]
        results = run_batch(tasks, config.workers)
    else:
        results = []
        for v in ok:
            cfg = config.loop_config(classifier=selector_factory(model), instance_id=variation_id(v["id"]))
            inst = base.with_objective(np.array(v["objective"][: base.n]), np.array(v["objective"][base.n:]))
            try:
                results.append(VariationResult(v["id"], run_cutting_loop(inst, cfg, z_int=v["z_int"]), v["z_int"]))
            except Exception as exc:
                results.append(VariationResult(v["id"], error=f"{type(exc).__name__}: {exc}"))

    rows = []
    for v, res in zip(ok, results):
        vid, side = variation_id(v["id"]), sides[v["id"]]
        useful = {}
        for r in full[v["id"]]:
            useful[int(r["round"])] = _rows_parse(r["useful_rows"])
            rows.append([vid, side, "full", int(r["round"]), r["gap_closed"], int(r["cuts_added"]),
                         int(r["n_allowed"]), float(r["sep_time"]), r["reason"], float(r["z"]), ""])
        if res.error:
            rows.append([vid, side, "reduced", 0, "", 0, 0, 0.0, f"Failed: {res.error}", math.nan, ""])
            continue
        for t in res.traces:
            sup = useful.get(t.round)
            flag = "" if sup is None else int(sup <= set(t.allowed_rows))
            rows.append([vid, side, "reduced", t.round, DEGENERATE if t.gap_closed is None else t.gap_closed,
                         t.cuts_added, len(t.allowed_rows), t.sep_time, t.reason.value if t.reason else "", t.z, flag])
    write_csv(config.out / "compare.csv", COMPARE_SCHEMA,
              {"seed": manifest["seed"], "threshold": config.threshold}, COMPARE_COLUMNS, rows)
    return rows


def final_gaps(table: CsvTable) -> dict[tuple[str, str], dict[str, float | None]]:
    """(side, separator) -> variation -> gap at its last round."""
    last: dict[tuple[str, str, str], tuple[int, float | None]] = {}
    for r in table.rows:
        key = (r["side"], r["separator"], r["variation"])
        rnd = int(r["round"])
        if key not in last or rnd >= last[key][0]:
            last[key] = (rnd, parse_gap(r["gap_closed"]))
    out: dict[tuple[str, str], dict[str, float | None]] = {}
    for (side, sep, vid), (_, g) in sorted(last.items()):
        out.setdefault((side, sep), {})[vid] = g
    return out


def cmd_report(compare_path: str | Path, config: ExperimentConfig) -> tuple[list[list], list[list]]:
    """Per-round mean/std gap with survivor counts, plus per-side final-gap summaries."""
    table = read_csv(compare_path, COMPARE_SCHEMA)
    groups: dict[tuple[str, str, int], list[float | None]] = {}
    rounds_per: dict[tuple[str, str, str], int] = {}
    for r in table.rows:
        if r["reason"].startswith("Failed"):
            continue
        key = (r["side"], r["separator"], int(r["round"]))
        groups.setdefault(key, []).append(parse_gap(r["gap_closed"]))
        vk = (r["side"], r["separator"], r["variation"])
        rounds_per[vk] = max(rounds_per.get(vk, 0), int(r["round"]))

    def stats(vals: list[float]) -> tuple[float | str, float | str]:
        if not vals:
            return UNDEFINED, UNDEFINED
        return float(np.mean(vals)), float(np.std(vals))

    report = []
    for (side, sep, rnd), gaps in sorted(groups.items()):
        vals = [g for g in gaps if g is not None]
        report.append([side, sep, rnd, len(gaps), len(vals), *stats(vals)])
    summary = []
    for (side, sep), per in sorted(final_gaps(table).items()):
        vals = [g for g in per.values() if g is not None]
        rounds = [rounds_per[(side, sep, vid)] for vid in per if (side, sep, vid) in rounds_per]
        summary.append([side, sep, len(per), len(vals), *stats(vals),
                        float(np.mean(rounds)) if rounds else UNDEFINED])
    meta = {"seed": table.meta.get("seed", "")}
    write_csv(config.out / "report.csv", REPORT_SCHEMA, meta, REPORT_COLUMNS, report)
    write_csv(config.out / "summary.csv", SUMMARY_SCHEMA, meta, SUMMARY_COLUMNS, summary)
    return report, summary
