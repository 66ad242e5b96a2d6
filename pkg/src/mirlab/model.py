"""MIP containers: general (mixed-sense, bounded) form and equality standard form.

The standard form keeps integer columns (``A``) and continuous columns (``C``)
apart, every row is an equality, and every variable is implicitly ``>= 0``:

    min f.x + g.v   s.t.  C v + A x = b,  x, v >= 0,  x integer.

Inequality rows receive one slack column each and finite upper bounds become
extra rows; ``row_meta`` remembers where each row came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError, UnsupportedVariableDomain

INT_TOL = 1e-6

LE, GE, EQ = "L", "G", "E"
SENSES = (LE, GE, EQ)


@dataclass
class GeneralMip:
    """A MIP with row senses and per-variable bounds, as read from an MPS file."""

    obj: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    rhs: np.ndarray
    integer: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    name: str = "mip"
    col_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.obj = np.asarray(self.obj, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.integer = np.asarray(self.integer, dtype=bool)
        nvars = self.obj.shape[0]
        if self.A.size == 0:
            self.A = self.A.reshape(len(self.rhs), nvars)
        self.lower = np.zeros(nvars) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(nvars, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        self.senses = list(self.senses)
        if self.col_names is None:
            self.col_names = [f"x{i}" for i in range(nvars)]
        if self.row_names is None:
            self.row_names = [f"r{j}" for j in range(len(self.rhs))]
        if self.A.shape != (len(self.rhs), nvars):
            raise ShapeError(f"A has shape {self.A.shape}, expected {(len(self.rhs), nvars)}")
        for arr in (self.integer, self.lower, self.upper):
            if arr.shape != (nvars,):
                raise ShapeError("bound/integrality vectors must match the number of columns")
        if len(self.senses) != len(self.rhs):
            raise ShapeError("one sense per row required")
        bad = [s for s in self.senses if s not in SENSES]
        if bad:
            raise ValueError(f"unknown row sense {bad[0]!r}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.rhs)) and np.all(np.isfinite(self.obj))):
            raise ValueError("coefficients must be finite")

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class RowMeta:
    """Provenance of one standard-form row.

    ``bound_of`` is ``("x", i)`` / ``("v", i)`` for rows that encode an upper
    bound on integer or continuous column ``i``; ``slack`` is the index of the
    row's own slack among the continuous columns (``None`` for equalities).
    """

    sense: str
    bound_of: tuple[str, int] | None = None
    slack: int | None = None
    name: str = ""

    @property
    def is_bound_row(self) -> bool:
        return self.bound_of is not None


@dataclass(frozen=True)
class Point:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(-1))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(-1))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("point entries must be finite")

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])

    def is_integral(self, tol: float = INT_TOL) -> bool:
        return bool(np.all(np.abs(self.x - np.round(self.x)) <= tol))

    def distance(self, other: Point) -> float:
        return float(np.max(np.abs(self.stacked() - other.stacked()), initial=0.0))


@dataclass(frozen=True, eq=False)
class MipInstance:
    """Equality standard form ``C v + A x = b`` with ``x, v >= 0``.

    ``int_upper``/``cont_upper`` record the finite upper bounds that were
    turned into rows (``inf`` otherwise); they are metadata, the rows are what
    enforce them.  ``z_int`` optionally carries a known integer optimum.
    """

    A: np.ndarray
    C: np.ndarray
    b: np.ndarray
    f: np.ndarray
    g: np.ndarray
    row_meta: tuple[RowMeta, ...] = ()
    int_upper: np.ndarray | None = None
    cont_upper: np.ndarray | None = None
    int_names: tuple[str, ...] = ()
    cont_names: tuple[str, ...] = ()
    name: str = "mip"
    z_int: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        m = b.shape[0]
        A = np.asarray(self.A, dtype=float).reshape(m, -1) if m else np.asarray(self.A, dtype=float).reshape(0, len(self.f))
        C = np.asarray(self.C, dtype=float).reshape(m, -1) if m else np.asarray(self.C, dtype=float).reshape(0, len(self.g))
        f = np.asarray(self.f, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=float).reshape(-1)
        n, p = A.shape[1], C.shape[1]
        if f.shape != (n,) or g.shape != (p,):
            raise ShapeError(f"cost vectors {f.shape}/{g.shape} do not match A {A.shape} / C {C.shape}")
        meta = tuple(self.row_meta) or tuple(RowMeta(EQ) for _ in range(m))
        if len(meta) != m:
            raise ShapeError("row_meta must have one entry per row")
        iu = np.full(n, np.inf) if self.int_upper is None else np.asarray(self.int_upper, dtype=float)
        cu = np.full(p, np.inf) if self.cont_upper is None else np.asarray(self.cont_upper, dtype=float)
        if iu.shape != (n,) or cu.shape != (p,):
            raise ShapeError("upper-bound metadata must match column counts")
        for arr in (A, C, b, f, g):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "row_meta", meta)
        object.__setattr__(self, "int_upper", iu)
        object.__setattr__(self, "cont_upper", cu)
        if not self.int_names:
            object.__setattr__(self, "int_names", tuple(f"x{i}" for i in range(n)))
        if not self.cont_names:
            object.__setattr__(self, "cont_names", tuple(f"v{i}" for i in range(p)))

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[1]

    @property
    def cost(self) -> np.ndarray:
        return np.concatenate([self.f, self.g])

    @property
    def matrix(self) -> np.ndarray:
        """``[A | C]``, integer columns first."""
        return np.hstack([self.A, self.C])

    def objective(self, point: Point) -> float:
        return float(self.f @ point.x + self.g @ point.v)

    def split(self, z: np.ndarray) -> Point:
        z = np.asarray(z, dtype=float)
        return Point(z[: self.n], z[self.n : self.n + self.p])

    def check_point(self, point: Point) -> None:
        if point.x.shape != (self.n,) or point.v.shape != (self.p,):
            raise ShapeError(
                f"point has shapes {point.x.shape}/{point.v.shape}, instance needs ({self.n},)/({self.p},)"
            )

    def with_objective(self, f: np.ndarray, g: np.ndarray, name: str | None = None) -> MipInstance:
        """Same constraint data (shared, not copied), new costs."""
        return MipInstance(
            self.A, self.C, self.b, f, g, self.row_meta, self.int_upper, self.cont_upper,
            self.int_names, self.cont_names, name or self.name, None, dict(self.extra),
        )

    def with_z_int(self, z_int: float) -> MipInstance:
        return MipInstance(
            self.A, self.C, self.b, self.f, self.g, self.row_meta, self.int_upper, self.cont_upper,
            self.int_names, self.cont_names, self.name, z_int, dict(self.extra),
        )

    def original_row(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row ``j`` without its own slack column: ``(coef_x, coef_v)``."""
        if not 0 <= j < self.m:
            raise ShapeError(f"row {j} out of range for {self.m} rows")
        cx = self.A[j].copy()
        cv = self.C[j].copy()
        slack = self.row_meta[j].slack
        if slack is not None:
            cv[slack] = 0.0
        return cx, cv


@dataclass(frozen=True)
class RowView:
    row_index: int
    coef_x: np.ndarray
    coef_v: np.ndarray
    rhs: float
    sense: str
    activity: float
    slack: float
    dual: float | None


def sense_slack(sense: str, rhs: float, activity: float) -> float:
    """Slack in the direction of the original sense (>= 0 when satisfied)."""
    if sense == GE:
        return activity - rhs
    return rhs - activity


def evaluate_row(instance: MipInstance, row: int, point: Point, duals: np.ndarray | None = None) -> RowView:
    """Activity and slack of an original row (own slack column excluded)."""
    instance.check_point(point)
    cx, cv = instance.original_row(row)
    activity = float(cx @ point.x + cv @ point.v)
    rhs = float(instance.b[row])
    sense = instance.row_meta[row].sense
    dual = None
    if duals is not None:
        duals = np.asarray(duals, dtype=float)
        if duals.shape[0] < instance.m:
            raise ShapeError("dual vector shorter than the row count")
        dual = float(duals[row])
    return RowView(row, cx, cv, rhs, sense, activity, sense_slack(sense, rhs, activity), dual)


def to_standard_form(general: GeneralMip) -> MipInstance:
    """Add one slack per inequality row and one row (plus slack) per finite upper bound."""
    lower = general.lower
    if np.any(np.isneginf(lower)):
        j = int(np.flatnonzero(np.isneginf(lower))[0])
        raise UnsupportedVariableDomain(f"variable {general.col_names[j]!r} is free (unbounded below)")
    if np.any(lower != 0.0):
        j = int(np.flatnonzero(lower != 0.0)[0])
        raise UnsupportedVariableDomain(
            f"variable {general.col_names[j]!r} has lower bound {lower[j]}; only 0 is supported"
        )
    if np.any(general.upper < 0):
        j = int(np.flatnonzero(general.upper < 0)[0])
        raise UnsupportedVariableDomain(f"variable {general.col_names[j]!r} has a negative upper bound")

    int_idx = np.flatnonzero(general.integer)
    cont_idx = np.flatnonzero(~general.integer)
    n = len(int_idx)
    pos = {int(c): ("x", k) for k, c in enumerate(int_idx)}
    pos.update({int(c): ("v", k) for k, c in enumerate(cont_idx)})

    rows_x: list[np.ndarray] = []
    rows_v: list[np.ndarray] = []
    rhs: list[float] = []
    meta_info: list[tuple[str, tuple[str, int] | None, str]] = []
    for j in range(general.num_rows):
        rows_x.append(general.A[j, int_idx])
        rows_v.append(general.A[j, cont_idx])
        rhs.append(float(general.rhs[j]))
        meta_info.append((general.senses[j], None, general.row_names[j]))
    for c in range(general.num_cols):
        u = general.upper[c]
        if np.isfinite(u):
            kind, k = pos[c]
            rx = np.zeros(n)
            rv = np.zeros(len(cont_idx))
            if kind == "x":
                rx[k] = 1.0
            else:
                rv[k] = 1.0
            rows_x.append(rx)
            rows_v.append(rv)
            rhs.append(float(u))
            meta_info.append((LE, (kind, k), f"ub_{general.col_names[c]}"))

    m = len(rhs)
    n_slack = sum(1 for s, _, _ in meta_info if s != EQ)
    p0 = len(cont_idx)
    A = np.array(rows_x).reshape(m, n)
    C = np.zeros((m, p0 + n_slack))
    if m:
        C[:, :p0] = np.array(rows_v).reshape(m, p0)
    meta = []
    s_col = p0
    slack_names = []
    for j, (sense, bound_of, rname) in enumerate(meta_info):
        if sense == EQ:
            meta.append(RowMeta(EQ, bound_of, None, rname))
            continue
        C[j, s_col] = 1.0 if sense == LE else -1.0
        meta.append(RowMeta(sense, bound_of, s_col, rname))
        slack_names.append(f"s_{rname}")
        s_col += 1

    upper = general.upper
    return MipInstance(
        A=A,
        C=C,
        b=np.array(rhs),
        f=general.obj[int_idx],
        g=np.concatenate([general.obj[cont_idx], np.zeros(n_slack)]),
        row_meta=tuple(meta),
        int_upper=upper[int_idx],
        cont_upper=np.concatenate([upper[cont_idx], np.full(n_slack, np.inf)]),
        int_names=tuple(general.col_names[i] for i in int_idx),
        cont_names=tuple([general.col_names[i] for i in cont_idx] + slack_names),
        name=general.name,
    )
