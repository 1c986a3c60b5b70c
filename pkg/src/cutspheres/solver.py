"""Cutting spheres algorithms: exact, warm restarts and inexact.

All three variants work on the centered problem (center moved to the origin)
and report points in the caller's coordinates.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from .cuts import OuterApproximation, QuadraticCut, append_cuts, linearize_at_level, restart_set
from .errors import BudgetExceeded, InvalidParameter, SubsolverFailure
from .geometry import GeometryConfig, sphere_polyhedron_feasibility
from .model import Array, Problem, violated_set
from .oracle import OracleBudget, brute_force_sqcqp

log = logging.getLogger(__name__)

VARIANTS = ("exact", "warm", "inexact")


class Status(str, Enum):
    FEASIBLE_EPS_OPTIMAL = "FeasibleEpsOptimal"
    FEASIBLE_OPTIMAL_FINITE = "FeasibleOptimalFinite"
    LOWER_BOUND_ONLY = "LowerBoundOnly"
    UNCERTIFIED = "Uncertified"

    @property
    def feasible(self) -> bool:
        return self in (Status.FEASIBLE_EPS_OPTIMAL, Status.FEASIBLE_OPTIMAL_FINITE)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the three variants.

    ``max_cuts`` bounds the cost ``m_k`` (cuts already held plus cuts about to
    be added). ``feas_tol`` is the slack used by the stopping test only; cut
    generation always uses the exact sign test ``f_i(x) > 0``.
    """

    variant: str = "inexact"
    eps: float = 1.0
    delta: float = 1e-3
    max_cuts: int = 50
    max_iter: int = 10_000
    seed: int = 0
    feas_tol: float = 1e-9
    start_level: float | None = None
    allow_uncertified: bool = False
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    oracle: OracleBudget = field(default_factory=OracleBudget)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameter(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "inexact" and not self.eps > 0:
            raise InvalidParameter("eps must be positive for the inexact variant")
        if self.variant == "warm" and not self.delta > 0:
            raise InvalidParameter("delta must be positive for the warm variant")
        if self.max_cuts < 1:
            raise InvalidParameter("max_cuts must be at least 1")
        if self.max_iter < 0 or self.feas_tol < 0:
            raise InvalidParameter("max_iter and feas_tol must be nonnegative")
        if self.start_level is not None and not (self.start_level >= 0 and math.isfinite(self.start_level)):
            raise InvalidParameter("start_level must be finite and nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    """State at iteration ``k``.

    ``restart`` marks a restart iteration (``x`` was produced by a restart) and
    ``branch`` names how ``x`` was obtained. ``cuts`` is the number of cuts in
    the subproblem that will be solved from ``x`` (0 when the run stops here).
    """

    k: int
    x: Array
    J: float
    level: float
    n_violated: int
    violated: tuple[int, ...]
    max_violation: float
    cuts: int
    restart: bool
    branch: str
    certified: bool = True
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "x": [float(v) for v in self.x],
            "J": self.J,
            "level": self.level,
            "n_violated": self.n_violated,
            "violated": list(self.violated),
            "max_violation": self.max_violation,
            "cuts": self.cuts,
            "restart": self.restart,
            "branch": self.branch,
            "certified": self.certified,
            "wall_time": self.wall_time,
        }
        d.update(self.extra)
        return d


@dataclass(frozen=True)
class SolveResult:
    status: Status
    x: Array
    J: float
    level: float
    trace: tuple[IterationRecord, ...]
    diagnostic: float
    iterations: int
    restarts: int
    message: str = ""

    @property
    def lower_bound(self) -> float:
        """``J`` at the final iterate; a lower bound on the optimum (plus ``eps`` for inexact runs)."""
        return self.J

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x": [float(v) for v in self.x],
            "J": self.J,
            "level": self.level,
            "diagnostic": self.diagnostic,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "message": self.message,
        }


# -- trace sinks ---------------------------------------------------------------


class ListSink:
    def __init__(self):
        self.records: list[dict] = []

    def __call__(self, rec: IterationRecord):
        self.records.append(rec.to_dict())


class JsonlSink:
    """Writes one JSON object per record, keys sorted, flushed per line."""

    def __init__(self, path):
        self._fh = open(path, "w", encoding="utf-8")

    def __call__(self, rec: IterationRecord):
        self._fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


Sink = Callable[[IterationRecord], None]
Annotator = Callable[[Array], dict]


class _Run:
    """Bookkeeping shared by the variants: trace, sink, annotation, timing."""

    def __init__(self, problem: Problem, sink: Sink | None, annotate: Annotator | None):
        self.original = problem
        self.problem = problem.centered()
        self.z = problem.center
        self.sink = sink
        self.annotate = annotate
        self.trace: list[IterationRecord] = []
        self.t0 = time.perf_counter()
        self.restarts = 0

    def record(self, k, x, report, cuts, restart, branch, certified=True, level=None):
        xo = x + self.z
        J = float(x @ x)
        extra = self.annotate(xo) if self.annotate else {}
        rec = IterationRecord(
            k=k,
            x=xo,
            J=J,
            level=J if level is None else float(level),
            n_violated=len(report),
            violated=report.indices,
            max_violation=report.max_violation,
            cuts=cuts,
            restart=restart,
            branch=branch,
            certified=certified,
            wall_time=time.perf_counter() - self.t0,
            extra=extra,
        )
        self.trace.append(rec)
        if self.sink is not None:
            self.sink(rec)
        log.debug("k=%d J=%.10g |I|=%d cuts=%d branch=%s", k, rec.J, rec.n_violated, cuts, branch)
        return rec

    def finish(self, status, x, report, message="", level=None):
        # points accepted within feas_tol count as feasible here too
        diag = 0.0 if status.feasible else infeasibility_diagnostic(self.original, x + self.z)
        log.info("%s after %d iterations: J=%.10g (%s)", status.value, len(self.trace) - 1, float(x @ x), message)
        return SolveResult(
            status=status,
            x=x + self.z,
            J=float(x @ x),
            level=float(x @ x) if level is None else float(level),
            trace=tuple(self.trace),
            diagnostic=diag,
            iterations=len(self.trace) - 1,
            restarts=self.restarts,
            message=message,
        )


def _oracle_subsolver(problem: Problem, budget: OracleBudget):
    if budget.radius is None and problem.level_cap is not None:
        budget = replace(budget, radius=math.sqrt(problem.level_cap))

    def solve(cuts: Sequence[QuadraticCut], z: Array) -> Array:
        try:
            return brute_force_sqcqp(cuts, z, budget).x
        except BudgetExceeded as exc:
            raise SubsolverFailure(str(exc)) from exc

    return solve


def _call_subsolver(subsolver, oa, n):
    x = np.asarray(subsolver(oa.as_quadratic_cuts(n), np.zeros(n)), dtype=float)
    if x.shape != (n,) or not np.all(np.isfinite(x)):
        raise SubsolverFailure(f"subsolver returned an invalid point {x!r}")
    floor = oa.norm_floor
    if floor and 0 < float(x @ x) < floor:
        # a local polish may stop a hair inside the floor; move radially onto it
        x = x * math.sqrt(floor / float(x @ x))
    return x


def _random_on_level(rng: np.random.Generator, n: int, level: float) -> Array:
    u = rng.standard_normal(n)
    return u / np.linalg.norm(u) * math.sqrt(level)


# -- variants ------------------------------------------------------------------


def solve_exact(problem: Problem, cfg: SolverConfig | None = None, subsolver=None, sink=None, annotate=None) -> SolveResult:
    """Plain cutting spheres: accumulate every cut, minimize globally each step.

    ``subsolver(cuts, z)`` must return a global minimizer of ``||x - z||^2``
    subject to the cuts; the default brute-force oracle only handles a few
    dimensions.
    """
    cfg = cfg or SolverConfig(variant="exact")
    run = _Run(problem, sink, annotate)
    p, n = run.problem, run.problem.dimension
    subsolver = subsolver or _oracle_subsolver(p, cfg.oracle)
    oa = OuterApproximation()
    x = np.zeros(n)
    branch = "start"
    for k in range(cfg.max_iter + 1):
        report = violated_set(p, x)
        if report.max_violation <= cfg.feas_tol:
            run.record(k, x, report, 0, False, branch)
            return run.finish(Status.FEASIBLE_OPTIMAL_FINITE, x, report)
        if k == cfg.max_iter:
            run.record(k, x, report, 0, False, branch)
            return run.finish(Status.LOWER_BOUND_ONLY, x, report, "iteration limit")
        oa = append_cuts(oa, p, report, x, k)
        run.record(k, x, report, len(oa), False, branch)
        x = _call_subsolver(subsolver, oa, n)
        branch = "subsolver"
    raise AssertionError("unreachable")


def solve_warm(problem: Problem, cfg: SolverConfig, subsolver=None, sink=None, annotate=None) -> SolveResult:
    """Cutting spheres with warm restarts.

    When the cost ``m_k`` reaches ``max_cuts``, the run either restarts (keeping
    only the cuts at ``x_k`` and the floor ``J >= J(x_k)``) if ``J`` rose by more
    than ``delta`` since the last restart, or stops with a lower bound.
    """
    if not cfg.delta > 0:
        raise InvalidParameter("delta must be positive")
    run = _Run(problem, sink, annotate)
    p, n = run.problem, run.problem.dimension
    subsolver = subsolver or _oracle_subsolver(p, cfg.oracle)
    oa = OuterApproximation()
    x = np.zeros(n)
    J_restart = 0.0
    branch, restarted = "start", False
    for k in range(cfg.max_iter + 1):
        report = violated_set(p, x)
        J = float(x @ x)
        if report.max_violation <= cfg.feas_tol:
            run.record(k, x, report, 0, restarted, branch)
            return run.finish(Status.FEASIBLE_OPTIMAL_FINITE, x, report)
        if k == cfg.max_iter:
            run.record(k, x, report, 0, restarted, branch)
            return run.finish(Status.LOWER_BOUND_ONLY, x, report, "iteration limit")
        m_k = len(oa) + len(report)
        if m_k >= cfg.max_cuts:
            if not J > J_restart + cfg.delta:
                run.record(k, x, report, 0, restarted, branch)
                return run.finish(Status.LOWER_BOUND_ONLY, x, report, "cost cap reached without a jump above delta")
            oa = restart_set(p, x, report, J, "warm", k + 1)
            next_branch, next_restart = "restart", True
        else:
            oa = append_cuts(oa, p, report, x, k)
            next_branch, next_restart = "cumulative", False
        run.record(k, x, report, len(oa), restarted, branch)
        x = _call_subsolver(subsolver, oa, n)
        if next_restart:
            run.restarts += 1
            J_restart = float(x @ x)
        branch, restarted = next_branch, next_restart
    raise AssertionError("unreachable")


def solve_inexact(problem: Problem, cfg: SolverConfig, sink=None, annotate=None) -> SolveResult:
    """Inexact cutting spheres.

    Each step linearizes the cuts on the sphere ``||x||^2 = J(x_k)`` and looks
    for a point of that sphere in the resulting polyhedron. A point is a global
    solution of the outer problem and becomes ``x_{k+1}``. Otherwise the run
    restarts from a random point on the level ``J(x_k) + eps`` with the cuts
    replaced by the floor ``||x||^2 >= J(x_k) + eps``.

    The level ``alpha_k`` is tracked as a number (start level plus a multiple of
    ``eps``) rather than recomputed from ``||x_k||^2``, so that rounding in the
    iterates never shifts it.
    """
    if not cfg.eps > 0:
        raise InvalidParameter("eps must be positive")
    run = _Run(problem, sink, annotate)
    p, n = run.problem, run.problem.dimension
    rng = np.random.default_rng(cfg.seed)
    if cfg.start_level:
        level = float(cfg.start_level)
        x = _random_on_level(rng, n, level)
        oa = OuterApproximation((), level, 0)
    else:
        level = 0.0
        x = np.zeros(n)
        oa = OuterApproximation()
    branch, restarted, certified = "start", False, True
    for k in range(cfg.max_iter + 1):
        report = violated_set(p, x)
        if report.max_violation <= cfg.feas_tol:
            run.record(k, x, report, 0, restarted, branch, certified, level)
            return run.finish(Status.FEASIBLE_EPS_OPTIMAL, x, report, level=level)
        m_k = len(oa) + len(report)
        if m_k > cfg.max_cuts:
            run.record(k, x, report, 0, restarted, branch, certified, level)
            return run.finish(Status.LOWER_BOUND_ONLY, x, report, "cost cap exceeded", level)
        if k == cfg.max_iter:
            run.record(k, x, report, 0, restarted, branch, certified, level)
            return run.finish(Status.LOWER_BOUND_ONLY, x, report, "iteration limit", level)
        oa = append_cuts(oa, p, report, x, k)
        run.record(k, x, report, len(oa), restarted, branch, certified, level)
        lp = linearize_at_level(oa, level, n)
        out = sphere_polyhedron_feasibility(lp.polyhedron, level, cfg.geometry)
        if out.is_point:
            x = out.point
            branch, restarted, certified = out.branch, False, True
            continue
        if not out.certified and not cfg.allow_uncertified:
            run.trace[-1] = replace(run.trace[-1], certified=False)
            return run.finish(Status.UNCERTIFIED, x, report, "empty outcome could not be certified", level)
        level = level + cfg.eps
        x = _random_on_level(rng, n, level)
        oa = OuterApproximation((), level, k + 1)
        run.restarts += 1
        branch, restarted, certified = out.branch, True, out.certified
    raise AssertionError("unreachable")


def solve(problem: Problem, cfg: SolverConfig, sink=None, annotate=None) -> SolveResult:
    if cfg.variant == "exact":
        return solve_exact(problem, cfg, sink=sink, annotate=annotate)
    if cfg.variant == "warm":
        return solve_warm(problem, cfg, sink=sink, annotate=annotate)
    return solve_inexact(problem, cfg, sink=sink, annotate=annotate)


# -- certificates and diagnostics ----------------------------------------------


@dataclass(frozen=True)
class KktReport:
    """``sufficient`` is True when the point passes every condition."""

    sufficient: bool
    violations: tuple[str, ...]
    stationarity: float
    complementarity: float
    curvature_margin: float
    feasibility: float

    @property
    def status(self) -> str:
        return "SufficientGlobal" if self.sufficient else "Violated"


def check_kkt_certificate(cuts: Sequence[QuadraticCut], z: Array, x: Array, gamma: Array, tol: float = 1e-8) -> KktReport:
    """Check the sufficient global optimality conditions for ``min ||x - z||^2`` over the cuts.

    Conditions: stationarity ``2x - 2z + sum g_i (b_i - 2 a_i x) = 0``,
    complementarity ``g_i q_i(x) = 0``, ``1 - sum g_i a_i >= 0``, plus
    feasibility of ``x`` and ``g >= 0, g != 0``.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    g = np.asarray(gamma, dtype=float).reshape(-1)
    cuts = list(cuts)
    if g.size != len(cuts):
        raise InvalidParameter(f"expected {len(cuts)} multipliers, got {g.size}")
    violations = []
    if np.any(g < 0) or not np.any(g > 0):
        violations.append("precondition: multipliers must be nonnegative and not all zero")
    q = np.array([c(x) for c in cuts])
    grad = 2.0 * x - 2.0 * z
    for gi, c in zip(g, cuts):
        grad = grad + gi * (c.b - 2.0 * c.a * x)
    scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(z)
    stat = float(np.linalg.norm(grad))
    comp = float(np.max(np.abs(g * q), initial=0.0))
    margin = 1.0 - float(sum(gi * c.a for gi, c in zip(g, cuts)))
    feas = float(np.max(q, initial=-np.inf))
    if stat > tol * scale:
        violations.append(f"stationarity residual {stat:.3e}")
    if comp > tol * scale:
        violations.append(f"complementarity residual {comp:.3e}")
    if margin < -tol:
        violations.append(f"curvature margin {margin:.3e} is negative")
    if feas > tol * scale:
        violations.append(f"point violates a cut by {feas:.3e}")
    return KktReport(not violations, tuple(violations), stat, comp, margin, feas)


def check_dimension_condition(cuts: Sequence[QuadraticCut], z: Array, tol: float | None = None) -> bool:
    """True when ``{-2z} U {b_i}`` spans a proper subspace of R^n."""
    z = np.asarray(z, dtype=float)
    M = np.vstack([-2.0 * z] + [c.b for c in cuts])
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = max(M.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return rank < z.size


def infeasibility_diagnostic(problem: Problem, x: Array) -> float:
    """Surrogate for the distance from ``x`` to the feasible set.

    Returns ``max (f_i(x) + a_i ||x||^2)_+`` over violated ``i`` (0 when ``x`` is
    feasible). It bounds the distance only up to an unknown constant factor.
    """
    x = np.asarray(x, dtype=float)
    report = violated_set(problem, x)
    if not report:
        return 0.0
    nx = float(x @ x)
    return max(max(report.values[j] + problem.constraints[i].curvature * nx, 0.0) for j, i in enumerate(report.indices))
