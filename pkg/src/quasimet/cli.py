"""``quasimet`` command-line front end.

Subcommands::

    validate SPACE.json          check a finite quasi-metric
    group SPACE.json             list the extended isometry group
    distances GRAPH.json         all-pairs distances of a weighted digraph
    projective CHART1 CHART2     test F1 = F2 + df and recover f
    fermat SPLIT.json            Fermat metric, reslicing, distances, lifts

Exit codes: 0 success, 1 input error, 2 mathematical failure (report on
stdout), 3 search cap exceeded.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import almost_iso, fermat, finsler, io, lengthspace
from .errors import CapExceeded, InputError, MathFailure
from .maps import ExprMap, ScalarField
from .qmetric import ARITHMETICS, DEFAULT_TOL

EXIT_OK, EXIT_INPUT, EXIT_MATH, EXIT_CAP = 0, 1, 2, 3
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class RunConfig:
    arithmetic: str = "rational"
    tolerance: float = DEFAULT_TOL
    search_cap: int = almost_iso.DEFAULT_SEARCH_CAP
    grid_resolution: int = 32
    output: Path | None = None
    seed: int = 0

    def __post_init__(self):
        if self.arithmetic not in ARITHMETICS:
            raise InputError(f"arithmetic must be one of {ARITHMETICS}")
        if not (self.tolerance >= 0 and math.isfinite(self.tolerance)):
            raise InputError("tolerance must be a finite number >= 0")
        if self.search_cap < 1:
            raise InputError("search cap must be >= 1")
        if self.grid_resolution < MIN_RESOLUTION:
            raise InputError(f"resolution must be >= {MIN_RESOLUTION}")

    @classmethod
    def from_args(cls, args):
        out = Path(args.out) if args.out else None
        return cls(args.arithmetic, args.tol, args.cap, args.res, out, args.seed)

    @property
    def rng(self):
        return np.random.default_rng(self.seed)


def _emit(cfg: RunConfig, report, name="report.json"):
    text = io.dumps(report)
    sys.stdout.write(text)
    if cfg.output is not None:
        cfg.output.mkdir(parents=True, exist_ok=True)
        (cfg.output / name).write_text(text, encoding="utf-8")


def _require_out(cfg, flag):
    if cfg.output is None:
        raise InputError(f"{flag} writes a CSV file and needs --out DIR")
    cfg.output.mkdir(parents=True, exist_ok=True)
    return cfg.output


def cmd_validate(args, cfg: RunConfig) -> int:
    space = io.load_space(io.read_json(args.input), cfg.arithmetic, cfg.tolerance)
    _emit(cfg, {"valid": True, "n": space.n, "symmetric": space.is_symmetric()})
    return EXIT_OK


def cmd_group(args, cfg: RunConfig) -> int:
    space = io.load_space(io.read_json(args.input), cfg.arithmetic, cfg.tolerance)
    group = almost_iso.enumerate_extended_group(space, cfg.search_cap)
    _emit(cfg, [a.to_json() for a in group])
    return EXIT_OK


def cmd_distances(args, cfg: RunConfig) -> int:
    graph = io.load_graph(io.read_json(args.input), cfg.arithmetic)
    table = lengthspace.induced_quasimetric(graph)
    labels = [str(i) for i in range(graph.n)]
    report = {"n": graph.n, "complete": table.is_complete()}
    if cfg.output is not None:
        _require_out(cfg, "distances")
        io.write_distance_csv(cfg.output / "distances.csv", labels, table.dist)
        report["csv"] = "distances.csv"
    else:
        report["d"] = [[None if v is None else float(v) for v in row] for row in table.dist]
    _emit(cfg, report)
    return EXIT_OK


def cmd_projective(args, cfg: RunConfig) -> int:
    c1 = io.load_chart(io.read_json(args.chart1))
    c2 = io.load_chart(io.read_json(args.chart2))
    res = finsler.projective_test(c1, c2, cfg.grid_resolution)
    _emit(cfg, res.to_json(include_potential=args.potential))
    return EXIT_OK if res.related else EXIT_MATH


def _chart_summary(split, resolution):
    pts = split.grid(max(4, resolution // 4))
    norms = []
    for p in pts:
        w = split.omega(p)
        h = split.g0(p) + np.outer(w, w)
        norms.append(float(math.sqrt(w @ np.linalg.solve(h, w))))
    x0, x1, y0, y1 = split.domain
    centre = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    F = fermat.fermat_metric(split)
    units = {name: F.F(centre, v) for name, v in
             (("+x", (1, 0)), ("-x", (-1, 0)), ("+y", (0, 1)), ("-y", (0, -1)))}
    return {"kind": F.kind, "domain": list(split.domain), "omega_h_norm_max": max(norms),
            "unit_costs_at_centre": units}


def _write_grid_distances(cfg, split, name):
    out = _require_out(cfg, "--distances")
    graph, rows = fermat.discretized_distances(split, cfg.grid_resolution)
    labels = [str(i) for i in range(graph.n)]
    io.write_distance_csv(out / name, labels, rows)
    return name


def cmd_fermat(args, cfg: RunConfig) -> int:
    split = io.load_splitting(io.read_json(args.input)).check()
    report = {"fermat": _chart_summary(split, cfg.grid_resolution)}
    target = split
    if args.reslice is not None:
        f = ScalarField.from_expr(args.reslice)
        try:
            target = fermat.reslice(split, f)
        except fermat.SliceError as e:
            report["reslice"] = {"expression": args.reslice, "valid": False, "error": str(e), **e.report}
            _emit(cfg, report)
            return EXIT_MATH
        report["reslice"] = {"expression": args.reslice, "valid": True,
                             "fermat": _chart_summary(target, cfg.grid_resolution)}
    if args.distances:
        report["grid"] = {"resolution": cfg.grid_resolution, "vertex": "i*res + j, i along y, j along x"}
        report["distances_csv"] = _write_grid_distances(cfg, split, "distances.csv")
        if target is not split:
            report["resliced_distances_csv"] = _write_grid_distances(cfg, target, "distances_resliced.csv")
    if args.lift is not None:
        phi_text, f_text = args.lift
        phi, f = ExprMap.parse(phi_text), ScalarField.from_expr(f_text)
        try:
            psi = fermat.lift(phi, f, split, target, resolution=max(MIN_RESOLUTION, cfg.grid_resolution // 2))
        except fermat.LiftError as e:
            report["lift"] = {"certified": False, "error": str(e), "details": e.report or {}}
            _emit(cfg, report)
            return EXIT_MATH
        conf = fermat.verify_conformality(psi, split, target)
        report["lift"] = {"certified": True, "phi": phi_text, "f": f_text, "conformality": conf.to_json()}
        if not conf.passed:
            _emit(cfg, report)
            return EXIT_MATH
    _emit(cfg, report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arithmetic", choices=ARITHMETICS, default="rational")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="float-mode comparison tolerance")
    common.add_argument("--cap", type=int, default=almost_iso.DEFAULT_SEARCH_CAP, help="largest n for group search")
    common.add_argument("--res", type=int, default=32, help="grid resolution per axis")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="directory for report.json and CSV files")

    p = argparse.ArgumentParser(prog="quasimet", description="Quasi-metrics, almost isometries and Fermat metrics.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("validate", parents=[common], help="validate a quasi-metric space")
    s.add_argument("input")
    s.set_defaults(run=cmd_validate)
    s = sub.add_parser("group", parents=[common], help="enumerate almost isometries onto itself")
    s.add_argument("input")
    s.set_defaults(run=cmd_group)
    s = sub.add_parser("distances", parents=[common], help="all-pairs distances of a weighted digraph")
    s.add_argument("input")
    s.set_defaults(run=cmd_distances)
    s = sub.add_parser("projective", parents=[common], help="test whether F1 = F2 + df")
    s.add_argument("chart1")
    s.add_argument("chart2")
    s.add_argument("--potential", action="store_true", help="include the recovered potential grid")
    s.set_defaults(run=cmd_projective)
    s = sub.add_parser("fermat", parents=[common], help="Fermat metric of a splitting")
    s.add_argument("input")
    s.add_argument("--reslice", metavar="F", help="expression f(x, y) of the new slice t = f")
    s.add_argument("--distances", action="store_true", help="write discretized Fermat distances as CSV")
    s.add_argument("--lift", nargs=2, metavar=("PHI", "F"), help='e.g. "x+0.1, y" "0"')
    s.set_defaults(run=cmd_fermat)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    try:
        cfg = RunConfig.from_args(args)
        return args.run(args, cfg)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except MathFailure as e:
        print(f"failed: {e}", file=sys.stderr)
        report = {"error": str(e)}
        if hasattr(e, "violations"):
            report["violations"] = [v.to_json() for v in e.violations]
        elif isinstance(e.report, dict):
            report.update(e.report)
        sys.stdout.write(io.dumps(report))
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
