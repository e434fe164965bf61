"""Command-line experiment harness.

Each subcommand builds an :class:`ExperimentConfig`, validates it completely,
runs one library operation and emits a JSON record plus, where it makes
sense, a CSV table and an SVG plot. Without ``--out`` the JSON (or, with
``--format csv``, the table) goes to stdout. With ``--out DIR`` all files are
written to ``DIR`` together, or none are.

Example::

    simplexscope scan-r --preset cantor13_prod2 --level 6 --k 1 \\
        --r-grid log:0.25:4:20 --eps 0.01 --pairs 1e6 --seed 7 --out run/
"""
from __future__ import annotations

import argparse
import io
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import configmeasure as cm
from . import fractal, pigeonhole, pushforward
from ._errors import InvalidInputError, ResourceLimitError
from .geometry import edge_order
from .records import csv_text, dumps_json, svg_line_plot, write_outputs
from .thresholds import threshold_lookup

__all__ = ["ExperimentConfig", "parse_grid", "run_experiment", "build_parser", "main"]


def parse_grid(text: str) -> np.ndarray:
    """``log:lo:hi:n``, ``lin:lo:hi:n`` or a comma-separated list of values."""
    text = text.strip()
    parts = text.split(":")
    try:
        if len(parts) == 4 and parts[0] in ("log", "lin"):
            lo, hi, n = float(parts[1]), float(parts[2]), int(parts[3])
            if n < 1:
                raise InvalidInputError("grid needs at least one point")
            if parts[0] == "log":
                if lo <= 0 or hi <= 0:
                    raise InvalidInputError("log grids need positive endpoints")
                return np.geomspace(lo, hi, n)
            return np.linspace(lo, hi, n)
        if len(parts) == 1:
            return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        pass
    raise InvalidInputError(f"cannot parse grid {text!r}; use log:lo:hi:n, lin:lo:hi:n or a comma list")


def _count(text: str) -> int:
    """Integers that may be written in float notation, such as ``1e6``."""
    value = float(text)
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


@dataclass
class ExperimentConfig:
    command: str
    preset: str | None = None
    level: int | None = None
    points: int | None = None
    input: str | None = None
    k: int = 1
    r: float | None = None
    r_grid: list = field(default_factory=list)
    eps: float | None = None
    eps_grid: list = field(default_factory=list)
    pairs: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "json"

    @property
    def sampled(self) -> bool:
        return self.pairs is not None

    def mode(self):
        return ("sampled", self.pairs, self.seed) if self.sampled else "exhaustive"

    def validate(self):
        def positive(name, value):
            if value is not None and not value > 0:
                raise InvalidInputError(f"--{name.replace('_', '-')} must be positive")

        for name in ("r", "level", "points", "pairs"):
            positive(name, getattr(self, name))
        if self.eps is not None and not self.eps >= 0:
            raise InvalidInputError("--eps must be nonnegative")
        if self.k < 1:
            raise InvalidInputError("--k must be at least 1")
        for v in list(self.r_grid) + list(self.eps_grid):
            if not v > 0:
                raise InvalidInputError("grid values must be positive")
        needs_seed = self.sampled or self.points is not None or self.command in ("lambda", "compare", "pigeonhole")
        if needs_seed and self.seed is None:
            raise InvalidInputError("--seed is required for sampled runs")
        if self.command not in ("pigeonhole", "thresholds"):
            sources = sum(x is not None for x in (self.preset, self.input))
            if sources != 1:
                raise InvalidInputError("give exactly one of --preset or --input")
            if self.preset is not None:
                fractal.preset(self.preset)
                if (self.level is None) == (self.points is None):
                    raise InvalidInputError("with --preset give exactly one of --level or --points")
            elif self.level is not None or self.points is not None:
                raise InvalidInputError("--level/--points apply only to --preset")
        if self.format not in ("json", "csv"):
            raise InvalidInputError("--format must be json or csv")

    def record(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in ("out", "format")}


def _pointset(cfg: ExperimentConfig) -> fractal.PointSet:
    if cfg.input is not None:
        return fractal.read_pointset_csv(cfg.input, provenance={"file": cfg.input})
    ifs = fractal.preset(cfg.preset)
    if cfg.level is not None:
        return fractal.generate_points(ifs, cfg.level)
    return fractal.generate_points(ifs, n=cfg.points, seed=cfg.seed)


def _run_gen(cfg):
    ps = _pointset(cfg)
    ifs = fractal.preset(cfg.preset) if cfg.preset else None
    result = {"n": len(ps), "d": ps.d, "diameter": ps.diameter()}
    if ifs is not None:
        result["similarity_dimension"] = fractal.similarity_dimension(ifs)
    buf = io.StringIO()
    fractal.write_pointset_csv(ps, buf)
    return result, {"points.csv": buf.getvalue()}, None


def _run_delta(cfg):
    ps = _pointset(cfg)
    if cfg.r is None:
        vecs = cm.delta_k(ps, cfg.k)
    else:
        vecs = cm.delta_k_r(ps, cfg.k, cfg.r, cfg.eps or 0.0)
    edges = edge_order(ps.d, cfg.k)
    result = {"count": int(vecs.shape[0]), "edges": [list(e) for e in edges]}
    header = [f"d{i}{j}" for i, j in edges]
    return result, {"delta.csv": csv_text(header, vecs.tolist())}, None


def _run_similar(cfg):
    ps = _pointset(cfg)
    if cfg.r is None:
        raise InvalidInputError("similar needs --r")
    tol = cfg.extra["tol"]
    wits = cm.find_similar_pairs(ps, cfg.k, cfg.r, tol, cfg.extra.get("budget"))
    rows = [[" ".join(map(str, w.base_tuple)), " ".join(map(str, w.other_tuples[0])), w.scales[0], w.residual]
            for w in wits]
    result = {"count": len(wits), "witnesses": [w.to_dict() for w in wits[: cfg.extra["limit"]]]}
    return result, {"similar.csv": csv_text(["base_tuple", "other_tuple", "scale", "residual"], rows)}, None


def _run_multisim(cfg):
    ps = _pointset(cfg)
    scales = cfg.extra["scales"]
    if not len(scales):
        raise InvalidInputError("multisim needs --scales")
    wits = cm.find_multi_similarity(ps, cfg.k, scales, cfg.extra["tol"], cfg.extra.get("budget"))
    rows = [[" ".join(map(str, w.base_tuple)), ";".join(" ".join(map(str, t)) for t in w.other_tuples),
             w.multiplicity, w.residual] for w in wits]
    result = {"count": len(wits), "witnesses": [w.to_dict() for w in wits[: cfg.extra["limit"]]]}
    return result, {"multisim.csv": csv_text(["base_tuple", "other_tuples", "multiplicity", "residual"], rows)}, None


def _run_scan(cfg):
    ps = _pointset(cfg)
    if not len(cfg.r_grid):
        raise InvalidInputError("scan-r needs --r-grid")
    eps = cfg.eps or 0.0
    scan = cm.scan_r(ps, cfg.k, cfg.r_grid, eps, cfg.mode())
    result = {"n_points": len(ps), "min": scan.min, "max": scan.max, "uniformity": scan.uniformity,
              "sampling": scan.sampling}
    table = csv_text(["r", "mass", "degenerate_mass"], scan.rows())
    plot = svg_line_plot(scan.r, {"mass": scan.mass, "degenerate mass": scan.degenerate_mass}, logx=True,
                         title=f"configuration-set mass, k={cfg.k}, eps={eps:g}", xlabel="r", ylabel="mass")
    return result, {"scan_r.csv": table}, plot


def _run_pinned(cfg):
    ps = _pointset(cfg)
    if cfg.r is None:
        raise InvalidInputError("pinned needs --r")
    pin = ps.points[cfg.extra["pin"]] if cfg.extra.get("pin") is not None else ps.points[0]
    found = cm.pinned_search(ps, pin, cfg.r, cfg.extra["tol"])
    rows = [list(y) + list(z) for y, z in found]
    header = [f"y{i + 1}" for i in range(ps.d)] + [f"z{i + 1}" for i in range(ps.d)]
    result = {"pin": pin.tolist(), "count": len(found)}
    return result, {"pinned.csv": csv_text(header, rows)}, None


def _run_lambda(cfg):
    ps = _pointset(cfg)
    r = cfg.r if cfg.r is not None else 1.0
    rep = pushforward.lambda_Lk1_functional(ps, cfg.k, r, cfg.extra["rotations"], cfg.extra["h"], cfg.seed,
                                            full_output=True)
    hold = pushforward.hoelder_check(ps, cfg.k, r, cfg.extra["rotations"], cfg.extra["h"], cfg.seed)
    result = {"value": rep.value, "atomic": rep.atomic, "max_cells": rep.max_cells, "hoelder_floor": hold.floor,
              "hoelder_passed": hold.passed}
    rows = [[i, v, c] for i, (v, c) in enumerate(zip(rep.per_rotation.tolist(), rep.occupied_cells.tolist()))]
    return result, {"lambda.csv": csv_text(["rotation", "value", "occupied_cells"], rows)}, None


def _run_compare(cfg):
    ps = _pointset(cfg)
    if not len(cfg.eps_grid):
        raise InvalidInputError("compare needs --eps-grid")
    r = cfg.r if cfg.r is not None else 1.0
    rows = pushforward.compare_sides(ps, cfg.k, r, cfg.eps_grid, cfg.extra["rotations"], cfg.seed, cfg.mode())
    table = csv_text(["eps", "lhs", "rhs", "ratio"], [[c.eps, c.lhs, c.rhs, c.ratio] for c in rows])
    result = {"ratios": [c.ratio for c in rows]}
    eps = np.array([c.eps for c in rows])
    plot = svg_line_plot(eps, {"pair count side": [c.lhs for c in rows], "rotation side": [c.rhs for c in rows]},
                         logx=True, title=f"two sides, k={cfg.k}, r={r:g}", xlabel="eps", ylabel="value")
    return result, {"compare.csv": table}, plot


def _run_pigeonhole(cfg):
    x = cfg.extra
    space = pigeonhole.FiniteProbSpace.uniform(x["M"])
    rep = pigeonhole.verify_lemma(space, x["c"], x["n"], x["trials"], cfg.seed, adversarial=x["adversarial"],
                                  exhaustive=x["exhaustive"])
    result = rep.to_dict()
    result["p_constant"] = pigeonhole.p_constant(x["c"])
    table = csv_text(["c", "n", "family_size", "families_checked", "counterexamples", "boundary_cases"],
                     [[rep.c, rep.n, rep.family_size, rep.families_checked, rep.counterexamples,
                       rep.boundary_cases]])
    return result, {"pigeonhole.csv": table}, None


def _run_thresholds(cfg):
    entry = threshold_lookup(cfg.k, cfg.extra["d"])
    row = entry.to_dict()
    return row, {"thresholds.csv": csv_text(list(row), [list(row.values())])}, None


_RUNNERS = {
    "gen": _run_gen,
    "delta": _run_delta,
    "similar": _run_similar,
    "multisim": _run_multisim,
    "scan-r": _run_scan,
    "pinned": _run_pinned,
    "lambda": _run_lambda,
    "compare": _run_compare,
    "pigeonhole": _run_pigeonhole,
    "thresholds": _run_thresholds,
}


def run_experiment(cfg: ExperimentConfig, stdout=None) -> dict:
    """Validate ``cfg``, run it and emit its outputs. Returns the JSON record."""
    stdout = stdout or sys.stdout
    cfg.validate()
    result, tables, plot = _RUNNERS[cfg.command](cfg)
    record = {"command": cfg.command, "config": cfg.record(), "result": result}
    text = dumps_json(record)
    if cfg.out is None:
        stdout.write(next(iter(tables.values())) if cfg.format == "csv" else text)
        return record
    files = {"result.json": text, **tables}
    if plot is not None:
        files["plot.svg"] = plot
    for path in write_outputs(cfg.out, files):
        stdout.write(path + "\n")
    return record


def _common(p, source=True):
    p.add_argument("--seed", type=int, help="integer seed; required for any sampled step")
    p.add_argument("--out", help="directory for result files (default: print to stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format without --out")
    if source:
        p.add_argument("--preset", help=f"IFS preset: {', '.join(sorted(fractal.PRESETS))}")
        p.add_argument("--level", type=int, help="full construction depth for --preset")
        p.add_argument("--points", type=_count, help="random attractor sample size for --preset")
        p.add_argument("--input", help="point-set CSV ('# d=<d>' header, x_1..x_d,weight rows)")
        p.add_argument("--k", type=int, default=1, help="simplex order (k+1 points)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplexscope", description="Configuration-set experiments on fractal point sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("gen", help="generate a preset point set"))

    p = sub.add_parser("delta", help="realized distance vectors, optionally restricted to scale r")
    _common(p)
    p.add_argument("--r", type=float)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("similar", help="pairs of configurations similar at scale r")
    _common(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--budget", type=_count)
    p.add_argument("--limit", type=int, default=100, help="witnesses listed in the JSON record")

    p = sub.add_parser("multisim", help="configurations with similar copies at several scales")
    _common(p)
    p.add_argument("--scales", type=parse_grid, required=True, help="comma list or grid of scales")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--budget", type=_count)
    p.add_argument("--limit", type=int, default=100)

    p = sub.add_parser("scan-r", help="mass of the r-scaled configuration set over a grid of r")
    _common(p)
    p.add_argument("--r-grid", type=parse_grid, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--pairs", type=_count, help="sampled tuples (default: exhaustive)")

    p = sub.add_parser("pinned", help="pairs (y, z) with |pin - z| = r |pin - y|")
    _common(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--pin", type=int, help="row index of the pin point (default 0)")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("lambda", help="rotation-averaged L^{k+1} norm of the difference measure")
    _common(p)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--rotations", type=_count, default=64)
    p.add_argument("--h", type=float, required=True, help="histogram cell size")

    p = sub.add_parser("compare", help="pair-count side versus rotation-average side over eps")
    _common(p)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--eps-grid", type=parse_grid, required=True)
    p.add_argument("--rotations", type=_count, default=64)
    p.add_argument("--pairs", type=_count)

    p = sub.add_parser("pigeonhole", help="verify the measure pigeonhole bound on random families")
    _common(p, source=False)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--M", type=int, required=True, help="atoms in the uniform space")
    p.add_argument("--trials", type=_count, default=1000)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--no-adversarial", dest="adversarial", action="store_false")

    p = sub.add_parser("thresholds", help="published dimension threshold for (k, d)")
    _common(p, source=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    return parser


_CONFIG_FIELDS = {"preset", "level", "points", "input", "k", "r", "pairs", "seed", "out", "format"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    ns = vars(args).copy()
    command = ns.pop("command")
    cfg = ExperimentConfig(command, **{k: ns.pop(k) for k in list(ns) if k in _CONFIG_FIELDS})
    if "r_grid" in ns:
        cfg.r_grid = ns.pop("r_grid").tolist()
    if "eps_grid" in ns:
        cfg.eps_grid = ns.pop("eps_grid").tolist()
    if "scales" in ns:
        ns["scales"] = ns["scales"].tolist()
    if "eps" in ns:
        cfg.eps = ns.pop("eps")
    cfg.extra = ns
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_experiment(config_from_args(args))
    except (InvalidInputError, ResourceLimitError, OSError) as exc:
        print(f"simplexscope {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
