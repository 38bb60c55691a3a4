"""Tabular views of results and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Any

import numpy as np

from .bne import BnePolicy
from .model1d import StrategyPair
from .multidim import EquilibriumPathND, EquilibriumResultND, SensitivityReportND
from .sensitivity import ContainmentReport, EquilibriumPath, SensitivityReport
from .solver1d import EquilibriumResult

Table = tuple[list[str], list[list[Any]]]


def _equilibrium_row(r: EquilibriumResult) -> list[Any]:
    certified = r.diagnostics.certified if r.diagnostics is not None else None
    return [r.x_left, r.x_right, *r.foc_residual, r.det, *r.utilities, *r.boundary_flags, certified]


EQ_COLUMNS = ["x_left", "x_right", "foc_left", "foc_right", "det_h", "utility_left",
              "utility_right", "flag_left", "flag_right", "certified"]


def table(obj) -> Table:
    """Header and rows for any result type the package produces."""
    if isinstance(obj, EquilibriumResult):
        return EQ_COLUMNS, [_equilibrium_row(obj)]
    if isinstance(obj, EquilibriumPath):
        return ["parameter"] + EQ_COLUMNS, [[v] + _equilibrium_row(r)
                                            for v, r in zip(obj.grid, obj.results)]
    if isinstance(obj, SensitivityReport):
        oracle = obj.oracle if obj.oracle is not None else (math.nan, math.nan)
        return (["kind", "size", "side", "x_left", "x_right", "pred_left", "pred_right",
                 "oracle_left", "oracle_right", "elasticity_left", "elasticity_right",
                 "closed_left", "closed_right", "det_h", "residual"],
                [[obj.kind, obj.size, obj.side or "", *obj.base, *obj.predicted, *oracle,
                  *obj.elasticities, *obj.closed_form, float(np.linalg.det(obj.hessian)),
                  obj.residual]])
    if isinstance(obj, ContainmentReport):
        return (["lambda", "x_left", "x_right", "contained", "strict"],
                [[lam, *p, c, st] for lam, p, c, st in
                 zip(obj.lambdas, obj.pairs, obj.contained, obj.strict)])
    if isinstance(obj, EquilibriumResultND):
        n = obj.dim
        return (_nd_coords(n) + ["residual"],
                [[*obj.x_left, *obj.x_right, obj.residual_norm]])
    if isinstance(obj, EquilibriumPathND):
        n = obj.results[0].dim if obj.results else 0
        cond = obj.conditions()
        return (["alpha"] + _nd_coords(n) + ["residual", "cond_left", "cond_right", "cond_full"],
                [[a, *r.x_left, *r.x_right, r.residual_norm, *c]
                 for a, r, c in zip(obj.grid, obj.results, cond)])
    if isinstance(obj, SensitivityReportND):
        n = obj.base.size // 2
        names = _nd_coords(n)
        oracle = obj.oracle if obj.oracle is not None else np.full(2 * n, math.nan)
        header = ["alpha"] + [f"{p}_{c}" for p in ("full", "block", "diag", "oracle", "elasticity")
                              for c in names] + ["cross_gap", "cross_bound"]
        return header, [[obj.alpha, *obj.full, *obj.block_only, *obj.diagonal, *oracle,
                         *obj.elasticities, obj.cross_gap, obj.cross_bound]]
    if isinstance(obj, BnePolicy):
        k = max(obj.left.size, obj.right.size)
        pad = lambda a, j: a[j] if j < a.size else math.nan
        return (["signal", "x_left", "x_right", "utility_left", "utility_right"],
                [[j, pad(obj.left, j), pad(obj.right, j), pad(obj.utilities_left, j),
                  pad(obj.utilities_right, j)] for j in range(k)])
    if isinstance(obj, StrategyPair):
        return ["x_left", "x_right"], [list(obj)]
    raise TypeError(f"no tabular form for {type(obj).__name__}")


def _nd_coords(n: int) -> list[str]:
    return [f"x_left_{i + 1}" for i in range(n)] + [f"x_right_{i + 1}" for i in range(n)]


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def to_csv(obj) -> str:
    return format_table(*table(obj))


def format_table(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_cell(v) for v in row] for row in rows)
    return buf.getvalue()


def emit_csv(obj, destination: str | Path) -> Path:
    """Write ``obj`` as CSV: fixed column order, 12 significant digits."""
    return write_table(*table(obj), destination)


def write_table(header: list[str], rows: list[list[Any]], destination: str | Path) -> Path:
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_table(header, rows))
    return path
