"""JSON loaders for spaces, graphs, charts and splittings, plus report writers.

Numbers in reports are rounded to 12 significant digits so that runs are
byte-for-byte reproducible across platforms.
"""
from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import expr as ex
from . import finsler
from .errors import InputError
from .fermat import ConformastationarySplitting
from .lengthspace import DirectedWeightedGraph, graph_from_rationals
from .qmetric import to_rational, validate

SIG_DIGITS = 12
CHART_VARIABLES = ("x", "y", "vx", "vy")
SPLIT_VARIABLES = ("x", "y", "t")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e.msg} (line {e.lineno})") from None


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    return obj[key]


def load_space(obj, arithmetic="rational", tolerance=None):
    d = _require(obj, "d", "space")
    labels = obj.get("labels")
    if arithmetic == "rational":
        d = [[_rational_entry(v) for v in row] if isinstance(row, list) else row for row in d] if isinstance(d, list) else d
        tolerance = None  # exact comparisons
    return validate(d, tolerance, labels=labels, arithmetic=arithmetic)


def _rational_entry(v):
    # "1/3" strings are allowed in exact mode
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad rational entry {v!r}") from None
    return v


def load_graph(obj, arithmetic="float"):
    n = _require(obj, "n", "graph")
    edges = _require(obj, "edges", "graph")
    coords = obj.get("coords")
    if not isinstance(edges, list) or any(not isinstance(e, list) or len(e) != 3 for e in edges):
        raise InputError("graph: edges must be [u, v, w] triples")
    if arithmetic == "rational":
        return graph_from_rationals(n, [(u, v, to_rational(_rational_entry(w))) for u, v, w in edges], coords)
    try:
        return DirectedWeightedGraph(n, [(u, v, float(w)) for u, v, w in edges], coords)
    except (TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(f"graph: {e}") from None


def _field(value, variables):
    e = ex.as_expr(value, variables)
    unknown = e.variables() - {"x", "y"}
    if unknown:
        raise InputError(f"field may only depend on x, y; got {sorted(unknown)}")
    return lambda p: float(e.evaluate({"x": p[0], "y": p[1]}))


def matrix_field(value):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(r, list) and len(r) == 2 for r in value)):
        raise InputError("matrix field must be [[a, b], [c, d]]")
    cells = [[_field(v, ("x", "y")) for v in row] for row in value]
    return lambda p: np.array([[c(p) for c in row] for row in cells])


def covector_field(value):
    if not (isinstance(value, list) and len(value) == 2):
        raise InputError("one-form must be [a, b]")
    parts = [_field(v, ("x", "y")) for v in value]
    return lambda p: np.array([c(p) for c in parts])


def _domain(obj, where):
    d = _require(obj, "domain", where)
    if not (isinstance(d, list) and len(d) == 4):
        raise InputError(f"{where}: domain must be [x0, x1, y0, y1]")
    return tuple(float(a) for a in d)


def load_chart(obj) -> finsler.FinslerChart:
    """Chart JSON. Custom charts use an expression in ``x, y, vx, vy``."""
    kind = _require(obj, "kind", "chart")
    domain = _domain(obj, "chart")
    if kind == finsler.RIEMANNIAN:
        return finsler.riemannian(matrix_field(obj.get("h", [[1, 0], [0, 1]])), domain)
    if kind == finsler.RANDERS:
        return finsler.randers(
            matrix_field(obj.get("h", [[1, 0], [0, 1]])), covector_field(_require(obj, "omega", "chart")), domain
        )
    if kind == finsler.CUSTOM:
        e = ex.parse(_require(obj, "expression", "chart"), CHART_VARIABLES)

        def F(x, v):
            return float(e.evaluate({"x": x[0], "y": x[1], "vx": v[0], "vy": v[1]}))

        return finsler.custom(F, domain, smooth=bool(obj.get("smooth", True)))
    raise InputError(f"unknown chart kind {kind!r}")


def load_splitting(obj) -> ConformastationarySplitting:
    domain = _domain(obj, "splitting")
    Om = ex.as_expr(obj.get("Omega", 1), SPLIT_VARIABLES)

    def Omega(p, t):
        return float(Om.evaluate({"x": p[0], "y": p[1], "t": t}))

    g0 = matrix_field(obj.get("g0", [[1, 0], [0, 1]]))
    omega = covector_field(obj.get("omega", [0, 0]))
    return ConformastationarySplitting(domain, Omega, g0, omega)


# output


def round_sig(v, digits=SIG_DIGITS):
    if isinstance(v, (bool, type(None), str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return float(f"{v:.{digits}g}")


def clean(obj):
    """Recursively round numbers and convert numpy containers for JSON."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, Fraction):
        return round_sig(float(obj))
    return round_sig(obj)


def dumps(obj) -> str:
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def fmt(v) -> str:
    if v is None:
        return "inf"
    return f"{float(v):.{SIG_DIGITS}g}"


def write_distance_csv(path, labels, rows):
    """Row = from, column = to; unreachable entries are written as ``inf``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from\\to", *labels])
        for label, row in zip(labels, rows):
            w.writerow([label, *(fmt(v) for v in row)])
    return path


def read_distance_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        labels, rows = [], []
        for r in reader:
            labels.append(r[0])
            rows.append([float(v) for v in r[1:]])
    return header[1:], labels, np.array(rows)
