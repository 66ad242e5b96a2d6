"""MPS reader/writer (fixed and free format).

Supported: NAME, OBJSENSE, ROWS (N/L/G/E), COLUMNS with MARKER INTORG/INTEND,
RHS, BOUNDS (UP, LO, FX, BV, LI, UI, PL, MI).  RANGES and free variables are
rejected.  Fixed-format files are read by whitespace splitting, which covers
every file whose names contain no spaces.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedFeature
from .model import GeneralMip

SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE", "OBJSENSE_MAX"}


def _number(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno) from None


def parse_mps(path: str | Path) -> GeneralMip:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_mps_text(text, default_name=path.stem)


def parse_mps_text(text: str, default_name: str = "mip") -> GeneralMip:
    name = default_name
    section = None
    maximize = False
    obj_row = None
    row_order: list[str] = []
    row_sense: dict[str, str] = {}
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    col_int: list[bool] = []
    entries: dict[tuple[str, int], float] = {}
    obj: dict[int, float] = {}
    rhs: dict[str, float] = {}
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    in_int = False
    ended = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        tokens = line.split()
        if not raw[0].isspace():
            head = tokens[0].upper()
            if head not in SECTIONS:
                raise ParseError(f"unknown section {tokens[0]!r}", lineno)
            section = head
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else name
            elif head == "RANGES":
                raise UnsupportedFeature("RANGES section is not supported", lineno)
            elif head == "OBJSENSE" and len(tokens) > 1:
                maximize = tokens[1].upper() in ("MAX", "MAXIMIZE")
            elif head == "ENDATA":
                ended = True
                break
            continue

        if section is None:
            raise ParseError("data line before any section header", lineno)
        if section == "OBJSENSE":
            maximize = tokens[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            if len(tokens) != 2:
                raise ParseError("ROWS lines need a type and a name", lineno)
            kind, rname = tokens[0].upper(), tokens[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if kind not in ("L", "G", "E"):
                raise ParseError(f"unknown row type {kind!r}", lineno)
            if rname in row_sense:
                raise ParseError(f"duplicate row {rname!r}", lineno)
            row_sense[rname] = kind
            row_order.append(rname)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                marker = tokens[2].strip("'\"").upper()
                if marker == "INTORG":
                    in_int = True
                elif marker == "INTEND":
                    in_int = False
                else:
                    raise ParseError(f"unknown marker {tokens[2]!r}", lineno)
                continue
            if len(tokens) not in (3, 5):
                raise ParseError("COLUMNS lines need 3 or 5 fields", lineno)
            cname = tokens[0]
            if cname not in col_index:
                col_index[cname] = len(col_order)
                col_order.append(cname)
                col_int.append(in_int)
            j = col_index[cname]
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                v = _number(val, lineno)
                if rname == obj_row:
                    obj[j] = v
                elif rname in row_sense:
                    entries[(rname, j)] = v
                else:
                    raise ParseError(f"column {cname!r} references unknown row {rname!r}", lineno)
        elif section == "RHS":
            fields = tokens[1:] if len(tokens) in (3, 5) else tokens
            if len(fields) not in (2, 4):
                raise ParseError("RHS lines need 2 or 4 row/value fields", lineno)
            for rname, val in zip(fields[0::2], fields[1::2]):
                v = _number(val, lineno)
                if rname == obj_row:
                    continue
                if rname not in row_sense:
                    raise ParseError(f"RHS references unknown row {rname!r}", lineno)
                rhs[rname] = v
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            if kind in ("FR", "MI", "PL", "BV"):
                if len(tokens) not in (3, 4):
                    raise ParseError(f"{kind} bound needs a set and a column name", lineno)
                cname, val = tokens[2], None
            else:
                if len(tokens) != 4:
                    raise ParseError(f"{kind} bound needs a set, a column and a value", lineno)
                cname, val = tokens[2], _number(tokens[3], lineno)
            if cname not in col_index:
                raise ParseError(f"bound on unknown column {cname!r}", lineno)
            j = col_index[cname]
            if kind == "UP":
                if val < 0 and lower.get(j, 0.0) == 0.0:
                    raise UnsupportedFeature(f"negative UP bound on {cname!r} would make it free below", lineno)
                upper[j] = val
            elif kind == "LO":
                lower[j] = val
            elif kind == "FX":
                lower[j] = val
                upper[j] = val
            elif kind == "BV":
                col_int[j] = True
                lower[j] = 0.0
                upper[j] = 1.0
            elif kind == "LI":
                col_int[j] = True
                lower[j] = val
            elif kind == "UI":
                col_int[j] = True
                upper[j] = val
            elif kind == "PL":
                upper[j] = np.inf
            elif kind in ("MI", "FR"):
                lower[j] = -np.inf
            else:
                raise ParseError(f"unknown bound type {kind!r}", lineno)

    if not ended:
        raise ParseError("missing ENDATA")
    if obj_row is None:
        raise ParseError("no objective (N) row")
    free = [col_order[j] for j, lo in lower.items() if lo == -np.inf]
    if free:
        raise UnsupportedFeature(f"free variable {free[0]!r} (MI/FR bound without a finite lower bound)")

    nrow, ncol = len(row_order), len(col_order)
    ridx = {r: i for i, r in enumerate(row_order)}
    A = np.zeros((nrow, ncol))
    for (rname, j), v in entries.items():
        A[ridx[rname], j] = v
    c = np.zeros(ncol)
    for j, v in obj.items():
        c[j] = v
    if maximize:
        c = -c
    lo = np.zeros(ncol)
    hi = np.full(ncol, np.inf)
    for j, v in lower.items():
        lo[j] = v
    for j, v in upper.items():
        hi[j] = v
    return GeneralMip(
        obj=c,
        A=A,
        senses=[row_sense[r] for r in row_order],
        rhs=np.array([rhs.get(r, 0.0) for r in row_order]),
        integer=np.array(col_int, dtype=bool),
        lower=lo,
        upper=hi,
        name=name,
        col_names=col_order,
        row_names=row_order,
    )


def write_mps(general: GeneralMip, path: str | Path) -> None:
    """Free-format MPS writer (minimization)."""

    def num(v) -> str:
        return repr(float(v))

    lines = [f"NAME {general.name}", "ROWS", " N obj"]
    lines += [f" {s} {r}" for s, r in zip(general.senses, general.row_names)]
    lines.append("COLUMNS")
    in_int = False
    for j, cname in enumerate(general.col_names):
        if general.integer[j] and not in_int:
            lines.append(" MARKER 'MARKER' 'INTORG'")
            in_int = True
        elif not general.integer[j] and in_int:
            lines.append(" MARKER 'MARKER' 'INTEND'")
            in_int = False
        if general.obj[j] != 0:
            lines.append(f" {cname} obj {num(general.obj[j])}")
        for i in np.flatnonzero(general.A[:, j]):
            lines.append(f" {cname} {general.row_names[i]} {num(general.A[i, j])}")
        if general.obj[j] == 0 and not np.any(general.A[:, j]):
            lines.append(f" {cname} obj 0.0")
    if in_int:
        lines.append(" MARKER 'MARKER' 'INTEND'")
    lines.append("RHS")
    for r, v in zip(general.row_names, general.rhs):
        if v != 0:
            lines.append(f" rhs {r} {num(v)}")
    lines.append("BOUNDS")
    for j, cname in enumerate(general.col_names):
        if general.lower[j] != 0:
            lines.append(f" LO bnd {cname} {num(general.lower[j])}")
        if np.isfinite(general.upper[j]):
            lines.append(f" UP bnd {cname} {num(general.upper[j])}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")
