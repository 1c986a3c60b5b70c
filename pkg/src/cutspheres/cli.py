"""Command-line interface.

    cutspheres solve CONFIG
    cutspheres trace-export TRACE --format csv [--output FILE]
    cutspheres oracle {sqcqp,project,vertices} INPUT

Exit codes: 0 feasible result, 2 lower bound only (or oracle budget exceeded),
3 uncertified, 1 any error. ``CUTSPHERES_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .cuts import QuadraticCut
from .errors import BudgetExceeded, ConfigError, CutSpheresError, InfeasiblePolyhedron, ParseError, UnboundedPolyhedron
from .geometry import GeometryConfig, Polyhedron
from .model import Problem, WeaklyConvexConstraint
from .oracle import OracleBudget, brute_force_sqcqp, enumerate_vertices, exact_projection_qp
from .problems import NpcSpec, PackingSpec, build_npc, build_packing, load_iris, load_libsvm, packing_radius_of
from .problems.npc import class_counts, npc_objective
from .solver import JsonlSink, SolverConfig, Status, solve

log = logging.getLogger("cutspheres")

EXIT_OK, EXIT_ERROR, EXIT_LOWER_BOUND, EXIT_UNCERTIFIED = 0, 1, 2, 3


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PackingSection(_Strict):
    kind: Literal["packing"]
    radii: list[Annotated[float, Field(gt=0)]] = Field(min_length=2)


class NpcSection(_Strict):
    kind: Literal["npc"]
    data: str = "iris"  # "iris" for the bundled file, else a LIBSVM path
    lam: float = Field(0.3, gt=0)
    thresholds: list[Annotated[float, Field(gt=0)]] = []


class QuadraticConstraint(_Strict):
    """``q ||x||^2 + b.x + c <= 0``."""

    q: float
    b: list[float]
    c: float


class CustomSection(_Strict):
    kind: Literal["custom-quadratic"]
    center: list[float] = Field(min_length=1)
    constraints: list[QuadraticConstraint] = Field(min_length=1)
    level_cap: float | None = None


class GeometrySection(_Strict):
    multistart: int = 4
    ascent_steps: int = 25
    enum_max_dim: int = 10
    enum_max_rows: int = 40
    enum_max_subsets: int = 300_000
    bnb_max_nodes: int = 4000
    seed: int = 0


class SolverSection(_Strict):
    variant: Literal["exact", "warm", "inexact"] = "inexact"
    eps: float = 1.0
    delta: float = 1e-3
    max_cuts: int = 50
    max_iter: int = 10_000
    seed: int = 0
    feas_tol: float = 1e-9
    start_level: float | None = None
    allow_uncertified: bool = False
    geometry: GeometrySection = GeometrySection()


class OutputSection(_Strict):
    result: str | None = None
    trace: str | None = None


class RunConfig(_Strict):
    problem: Annotated[Union[PackingSection, NpcSection, CustomSection], Field(discriminator="kind")]
    solver: SolverSection = SolverSection()
    output: OutputSection = OutputSection()


def load_config(path: str | Path) -> RunConfig:
    """Read a TOML (or ``.json``) run configuration and validate it."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, exc.colno, exc.msg) from None
    else:
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line, col = getattr(exc, "lineno", 0), getattr(exc, "colno", 0)
            raise ParseError(line, col, getattr(exc, "msg", str(exc))) from None
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"{path}: {msgs}") from None


def _custom_problem(sec: CustomSection) -> Problem:
    n = len(sec.center)
    cons = []
    for i, qc in enumerate(sec.constraints):
        if len(qc.b) != n:
            raise ConfigError(f"problem.constraints[{i}].b has length {len(qc.b)}, expected {n}")
        q, b, c = qc.q, np.array(qc.b), qc.c
        cons.append(
            WeaklyConvexConstraint.from_smooth(
                lambda x, q=q, b=b, c=c: q * float(x @ x) + float(b @ x) + c,
                lambda x, q=q, b=b: 2.0 * q * x + b,
                max(0.0, -q),
                f"quad_{i + 1}",
            )
        )
    return Problem(np.array(sec.center), cons, sec.level_cap)


def build_problem(cfg: RunConfig, base: Path):
    """Problem plus a per-record annotator and a result summarizer."""
    sec = cfg.problem
    if isinstance(sec, PackingSection):
        spec = PackingSpec(tuple(sec.radii))

        def annotate(v):
            return {"radius": packing_radius_of(v, spec)}

        def summary(v):
            r = packing_radius_of(v, spec)
            return {"radius": r, "F": r * r}

        return build_packing(spec), annotate, summary
    if isinstance(sec, NpcSection):
        data = load_iris() if sec.data == "iris" else load_libsvm(base / sec.data)
        spec = NpcSpec.from_dataset(data, sec.lam, tuple(sec.thresholds))

        def annotate(x):
            return {"F1": npc_objective(x, spec)}

        def summary(x):
            return {"F1": npc_objective(x, spec), "class_counts": class_counts(x, spec)}

        return build_npc(spec), annotate, summary
    return _custom_problem(sec), None, lambda x: {}


def solver_config(sec: SolverSection) -> SolverConfig:
    g = sec.geometry
    geo = GeometryConfig(
        multistart=g.multistart,
        ascent_steps=g.ascent_steps,
        enum_max_dim=g.enum_max_dim,
        enum_max_rows=g.enum_max_rows,
        enum_max_subsets=g.enum_max_subsets,
        bnb_max_nodes=g.bnb_max_nodes,
        seed=g.seed,
    )
    return SolverConfig(
        variant=sec.variant,
        eps=sec.eps,
        delta=sec.delta,
        max_cuts=sec.max_cuts,
        max_iter=sec.max_iter,
        seed=sec.seed,
        feas_tol=sec.feas_tol,
        start_level=sec.start_level,
        allow_uncertified=sec.allow_uncertified,
        geometry=geo,
    )


_EXIT = {
    Status.FEASIBLE_EPS_OPTIMAL: EXIT_OK,
    Status.FEASIBLE_OPTIMAL_FINITE: EXIT_OK,
    Status.LOWER_BOUND_ONLY: EXIT_LOWER_BOUND,
    Status.UNCERTIFIED: EXIT_UNCERTIFIED,
}


def cmd_solve(args) -> int:
    path = Path(args.config)
    cfg = load_config(path)
    base = path.parent
    problem, annotate, summary = build_problem(cfg, base)
    scfg = solver_config(cfg.solver)
    sink = JsonlSink(base / cfg.output.trace) if cfg.output.trace else None
    try:
        res = solve(problem, scfg, sink=sink, annotate=annotate)
    finally:
        if sink is not None:
            sink.close()
    out = res.to_dict()
    out.update(summary(res.x))
    text = json.dumps(out, sort_keys=True, indent=2)
    if cfg.output.result:
        (base / cfg.output.result).write_text(text + "\n", encoding="utf-8")
    print(text)
    return _EXIT[res.status]


def read_trace(path) -> list[dict]:
    recs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                recs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, exc.colno, exc.msg) from None
    return recs


def check_monotone(recs: list[dict], tol: float = 1e-10) -> None:
    for prev, cur in zip(recs, recs[1:]):
        if cur["J"] < prev["J"] - tol:
            raise ConfigError(f"trace is not monotone: J drops from {prev['J']} at k={prev['k']} to {cur['J']} at k={cur['k']}")


def _cell(rec, col):
    v = rec.get(col, "")
    if col == "restart":
        return int(bool(v))
    return repr(v) if isinstance(v, float) else v


def cmd_trace_export(args) -> int:
    recs = read_trace(args.trace)
    for i, r in enumerate(recs, start=1):
        missing = {"k", "J", "cuts", "restart"} - r.keys()
        if missing:
            raise ParseError(i, 1, f"record lacks {sorted(missing)}")
    check_monotone(recs)
    has_f1 = any("F1" in r for r in recs)
    cols = ["k", "J"] + (["F1"] if has_f1 else []) + ["cuts", "restart"]
    fh = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in recs:
            w.writerow([_cell(r, c) for c in cols])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _read_json(arg):
    text = sys.stdin.read() if arg == "-" else Path(arg).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.colno, exc.msg) from None


def cmd_oracle(args) -> int:
    """Inputs are JSON: ``sqcqp`` takes ``{"z", "cuts": [{"a","b","c"}], "radius"?}``,
    ``project`` takes ``{"G", "h", "z"}`` and ``vertices`` takes ``{"G", "h"}``."""
    spec = _read_json(args.input)
    try:
        if args.sub == "sqcqp":
            z = np.asarray(spec["z"], dtype=float)
            cuts = [QuadraticCut(c["a"], c["b"], c["c"]) for c in spec.get("cuts", [])]
            res = brute_force_sqcqp(cuts, z, OracleBudget(radius=spec.get("radius")))
            print(f"J*={res.value:.12g}")
            print(json.dumps({"x": res.x.tolist(), "J": res.value, "certificate": res.certificate, "gap": res.gap}))
        elif args.sub == "project":
            P = Polyhedron(np.array(spec["G"], dtype=float), spec["h"])
            x = exact_projection_qp(P, np.asarray(spec["z"], dtype=float))
            print(json.dumps({"x": x.tolist()}))
        else:
            P = Polyhedron(np.array(spec["G"], dtype=float), spec["h"])
            V = enumerate_vertices(P)
            print(json.dumps({"vertices": V.tolist()}))
    except KeyError as exc:
        raise ConfigError(f"oracle input lacks key {exc}") from None
    except BudgetExceeded as exc:
        print(f"BudgetExceeded: {exc}", file=sys.stderr)
        return EXIT_LOWER_BOUND
    except (InfeasiblePolyhedron, UnboundedPolyhedron) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cutspheres", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="run a solve from a TOML or JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_solve)
    p = sub.add_parser("trace-export", help="convert a JSONL trace to CSV")
    p.add_argument("trace")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_trace_export)
    p = sub.add_parser("oracle", help="brute-force reference solvers")
    p.add_argument("sub", choices=["sqcqp", "project", "vertices"])
    p.add_argument("input", help="JSON file, or - for stdin")
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("CUTSPHERES_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CutSpheresError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
