"""Free-format MPS writer/reader and a CPLEX-style LP writer.

The writer emits a canonical layout (variables by id, rows by id, one
coefficient per line) so that export -> import -> export is byte-stable.
Infinite bounds are expressed by omission / MI / PL, never as big numbers.
"""

from __future__ import annotations

import math
from pathlib import Path

from .model import INF, MilpModel, ModelError, Sense, VarKind

_SENSE_TO_ROW = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}
_ROW_TO_SENSE = {v: k for k, v in _SENSE_TO_ROW.items()}

_OBJ = "OBJ"


class MpsSyntaxError(Exception):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def export_mps(model: MilpModel, path: str | Path) -> None:
    Path(path).write_text(mps_text(model))


def mps_text(model: MilpModel) -> str:
    out: list[str] = []
    out.append(f"NAME {model.name}")
    for key in sorted(model.metadata):
        out.append(f"* META {key} {model.metadata[key]}")
    out.append("ROWS")
    out.append(f" N {_OBJ}")
    for con in model.constraints:
        out.append(f" {_SENSE_TO_ROW[con.sense]} {con.name}")

    # Column-major coefficients: objective entry always present so that
    # otherwise-unused variables survive a round trip.
    by_var: dict[int, list[tuple[str, float]]] = {i: [] for i in range(model.num_vars)}
    for con in model.constraints:
        for vid, coeff in sorted(con.terms):
            by_var[vid].append((con.name, coeff))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for vid, var in enumerate(model.variables):
        want_int = var.kind is VarKind.BINARY
        if want_int != in_int:
            marker += 1
            kind = "INTORG" if want_int else "INTEND"
            out.append(f" M{marker} 'MARKER' '{kind}'")
            in_int = want_int
        out.append(f" {var.name} {_OBJ} {_num(var.obj)}")
        for row_name, coeff in by_var[vid]:
            out.append(f" {var.name} {row_name} {_num(coeff)}")
    if in_int:
        marker += 1
        out.append(f" M{marker} 'MARKER' 'INTEND'")

    out.append("RHS")
    for con in model.constraints:
        out.append(f" RHS {con.name} {_num(con.rhs)}")

    out.append("BOUNDS")
    for var in model.variables:
        lo, up = var.lower, var.upper
        if var.kind is VarKind.BINARY:
            out.append(f" BV BND {var.name}")
        elif lo == up:
            out.append(f" FX BND {var.name} {_num(lo)}")
        elif lo == -INF and up == INF:
            out.append(f" FR BND {var.name}")
        else:
            if lo == -INF:
                out.append(f" MI BND {var.name}")
            elif lo != 0.0:
                out.append(f" LO BND {var.name} {_num(lo)}")
            if up != INF:
                out.append(f" UP BND {var.name} {_num(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def import_mps(path: str | Path) -> MilpModel:
    """Read free-format MPS written by :func:`export_mps` (or compatible)."""
    text = Path(path).read_text()
    model = MilpModel()
    section = None
    row_sense: dict[str, Sense] = {}
    row_terms: dict[str, list[tuple[int, float]]] = {}
    row_rhs: dict[str, float] = {}
    row_order: list[str] = []
    var_kind: dict[str, VarKind] = {}
    var_obj: dict[str, float] = {}
    var_bounds: dict[str, list[float]] = {}
    var_order: list[str] = []
    in_int = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("* META "):
            parts = raw.split(maxsplit=3)
            if len(parts) == 4:
                model.metadata[parts[2]] = parts[3]
            continue
        if raw.startswith("*") or not raw.strip():
            continue
        tokens = raw.split()
        head = tokens[0].upper()
        if head in ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA") and (
            not raw[0].isspace() or head == "NAME"
        ):
            if head == "NAME":
                model.name = tokens[1] if len(tokens) > 1 else "model"
            section = head
            if head == "ENDATA":
                break
            continue

        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsSyntaxError(f"bad row declaration {raw!r}", line_no)
            kind, name = tokens[0].upper(), tokens[1]
            if kind == "N":
                continue
            if kind not in _ROW_TO_SENSE:
                raise MpsSyntaxError(f"unknown row type {kind!r}", line_no)
            row_sense[name] = _ROW_TO_SENSE[kind]
            row_terms[name] = []
            row_rhs[name] = 0.0
            row_order.append(name)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                if tokens[2] == "'INTORG'":
                    in_int = True
                elif tokens[2] == "'INTEND'":
                    in_int = False
                else:
                    raise MpsSyntaxError(f"unknown marker {tokens[2]!r}", line_no)
                continue
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsSyntaxError(f"bad COLUMNS entry {raw!r}", line_no)
            vname = tokens[0]
            if vname not in var_obj:
                var_obj[vname] = 0.0
                var_kind[vname] = VarKind.BINARY if in_int else VarKind.CONTINUOUS
                var_bounds[vname] = [0.0, INF]
                var_order.append(vname)
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                try:
                    coeff = float(val)
                except ValueError:
                    raise MpsSyntaxError(f"bad coefficient {val!r}", line_no)
                if rname == _OBJ:
                    var_obj[vname] = coeff
                elif rname in row_terms:
                    row_terms[rname].append((len(var_order) - 1, coeff))
                else:
                    raise MpsSyntaxError(f"unknown row {rname!r}", line_no)
        elif section == "RHS":
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsSyntaxError(f"bad RHS entry {raw!r}", line_no)
            for rname, val in zip(tokens[1::2], tokens[2::2]):
                if rname == _OBJ:
                    continue
                if rname not in row_rhs:
                    raise MpsSyntaxError(f"unknown row {rname!r}", line_no)
                try:
                    row_rhs[rname] = float(val)
                except ValueError:
                    raise MpsSyntaxError(f"bad rhs {val!r}", line_no)
        elif section == "BOUNDS":
            if len(tokens) < 3:
                raise MpsSyntaxError(f"bad BOUNDS entry {raw!r}", line_no)
            btype, vname = tokens[0].upper(), tokens[2]
            if vname not in var_bounds:
                raise MpsSyntaxError(f"bound for unknown variable {vname!r}", line_no)
            b = var_bounds[vname]
            val = float(tokens[3]) if len(tokens) > 3 else math.nan
            if btype == "UP":
                b[1] = val
            elif btype == "LO":
                b[0] = val
            elif btype == "FX":
                b[0] = b[1] = val
            elif btype == "FR":
                b[0], b[1] = -INF, INF
            elif btype == "MI":
                b[0] = -INF
            elif btype == "PL":
                b[1] = INF
            elif btype == "BV":
                var_kind[vname] = VarKind.BINARY
                b[0], b[1] = 0.0, 1.0
            else:
                raise MpsSyntaxError(f"unknown bound type {btype!r}", line_no)
        elif section in ("RANGES",):
            raise MpsSyntaxError("RANGES section not supported", line_no)
        elif section is None:
            raise MpsSyntaxError(f"content before any section: {raw!r}", line_no)

    for vname in var_order:
        lo, up = var_bounds[vname]
        kind = var_kind[vname]
        if kind is VarKind.BINARY and (lo, up) != (0.0, 1.0):
            raise ModelError(f"integer variable {vname} is not binary (bounds {lo}, {up})")
        model.add_variable(vname, kind, lo, up, var_obj[vname])
    for rname in row_order:
        model.add_constraint(rname, row_terms[rname], row_sense[rname], row_rhs[rname])
    return model


def export_lp(model: MilpModel, path: str | Path) -> None:
    Path(path).write_text(lp_text(model))


def _lp_terms(terms: list[tuple[float, str]]) -> str:
    parts: list[str] = []
    for coeff, name in terms:
        if not parts:
            parts.append(f"{_num(coeff)} {name}" if coeff >= 0 else f"- {_num(-coeff)} {name}")
        elif coeff >= 0:
            parts.append(f"+ {_num(coeff)} {name}")
        else:
            parts.append(f"- {_num(-coeff)} {name}")
    return " ".join(parts)


def lp_text(model: MilpModel) -> str:
    out = [f"\\ {model.name}"]
    out.append("Minimize")
    obj_terms = [(v.obj, v.name) for v in model.variables if v.obj != 0.0]
    if not obj_terms:
        obj_terms = [(0.0, model.variables[0].name)] if model.variables else []
    out.append(" obj: " + _lp_terms(obj_terms))
    out.append("Subject To")
    for con in model.constraints:
        terms = [(coeff, model.variables[vid].name) for vid, coeff in sorted(con.terms)]
        out.append(f" {con.name}: {_lp_terms(terms)} {con.sense.value} {_num(con.rhs)}")
    out.append("Bounds")
    for var in model.variables:
        if var.kind is VarKind.BINARY:
            continue
        lo, up = var.lower, var.upper
        if lo == up:
            out.append(f" {var.name} = {_num(lo)}")
        elif lo == -INF and up == INF:
            out.append(f" {var.name} free")
        elif up == INF:
            if lo != 0.0:
                out.append(f" {_num(lo)} <= {var.name}")
        elif lo == -INF:
            out.append(f" -inf <= {var.name} <= {_num(up)}")
        else:
            out.append(f" {_num(lo)} <= {var.name} <= {_num(up)}")
    binaries = [v.name for v in model.variables if v.kind is VarKind.BINARY]
    if binaries:
        out.append("Binaries")
        for i in range(0, len(binaries), 8):
            out.append(" " + " ".join(binaries[i : i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
