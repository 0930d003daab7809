"""Fixed-format MPS writer."""
from __future__ import annotations

import math

from .model import MilpModel, Sense

_ROW_TYPE = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}


def _num(v: float) -> str:
    """Shortest %g rendering that fits the 12-character value field."""
    for prec in range(12, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot fit {v!r} into an MPS field")


def _line(code: str, name1: str, name2: str = "", val1=None, name3: str = "", val2=None) -> str:
    s = f" {code:<2} {name1:<8}  {name2:<8}"
    if val1 is not None:
        s += f"  {_num(val1):>12}"
    if name3:
        s += f"   {name3:<8}  {_num(val2):>12}"
    return s.rstrip()


def export_mps(model: MilpModel) -> str:
    """Render ``model`` as fixed-format MPS text.

    Rows are named R0000001..., columns C0000001... in id order; binaries
    sit between INTORG/INTEND markers and carry BV bounds. Maximization is
    declared with an OBJSENSE section.
    """
    if model.n_vars > 9_999_999 or model.n_constraints > 9_999_999:
        raise ValueError("model too large for 8-character MPS names")
    row_names = [f"R{r + 1:07d}" for r in range(model.n_constraints)]
    col_names = [f"C{v.id + 1:07d}" for v in model.variables]

    # column-major coefficient lists, deterministic by (column, row)
    cols: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for vid, c in sorted(model.objective.items()):
        if c != 0:
            cols[vid].append(("OBJ", c))
    for r, con in enumerate(model.constraints):
        for vid, a in zip(con.index, con.coef):
            cols[int(vid)].append((row_names[r], float(a)))

    out = [f"NAME          {model.name[:8].upper() or 'MODEL'}"]
    out.append("OBJSENSE")
    out.append("    MAX" if model.maximize else "    MIN")
    out.append("ROWS")
    out.append(" N  OBJ")
    for name, con in zip(row_names, model.constraints):
        out.append(f" {_ROW_TYPE[con.sense]}  {name}")
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for v, entries in zip(model.variables, cols):
        if v.binary and not in_int:
            out.append(f"    MARKER{marker:02d}  'MARKER'                 'INTORG'")
            in_int = True
            marker += 1
        elif not v.binary and in_int:
            out.append(f"    MARKER{marker:02d}  'MARKER'                 'INTEND'")
            in_int = False
            marker += 1
        name = col_names[v.id]
        if not entries:
            entries = [("OBJ", 0.0)]
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", name, pair[0][0], pair[0][1], pair[1][0], pair[1][1]))
            else:
                out.append(_line("", name, pair[0][0], pair[0][1]))
    if in_int:
        out.append(f"    MARKER{marker:02d}  'MARKER'                 'INTEND'")
    out.append("RHS")
    for name, con in zip(row_names, model.constraints):
        if con.rhs != 0:
            out.append(_line("", "RHS", name, con.rhs))
    out.append("BOUNDS")
    for v, name in zip(model.variables, col_names):
        lo, hi = v.lower, v.upper
        if v.binary and lo == 0 and hi == 1:
            out.append(_line("BV", "BND", name))
        elif lo == hi:
            out.append(_line("FX", "BND", name, lo))
        elif math.isinf(lo) and math.isinf(hi):
            out.append(_line("FR", "BND", name))
        else:
            if math.isinf(lo):
                out.append(_line("MI", "BND", name))
            elif lo != 0:
                out.append(_line("LO", "BND", name, lo))
            if not math.isinf(hi):
                out.append(_line("UP", "BND", name, hi))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(model: MilpModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(export_mps(model))

