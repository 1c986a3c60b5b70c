"""Quadratic cuts and outer approximations of the feasible set.

A cut is stored as ``q(x) = -a ||x||^2 + b.x + c <= 0``. For ``a > 0`` the
excluded region ``{q > 0}`` is an open ball; for ``a == 0`` it is an open
halfspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHalfspace, PreconditionViolated
from .geometry import Polyhedron
from .model import Array, ViolationReport, WeaklyConvexConstraint


@dataclass(frozen=True, eq=False)
class QuadraticCut:
    a: float
    b: Array
    c: float
    constraint: int = -1
    iterate: int = -1

    def __post_init__(self):
        b = np.array(self.b, dtype=float).reshape(-1)
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "c", float(self.c))

    def __call__(self, x: Array) -> float:
        x = np.asarray(x, dtype=float)
        return -self.a * float(x @ x) + float(self.b @ x) + self.c

    def __eq__(self, other):
        if not isinstance(other, QuadraticCut):
            return NotImplemented
        return self.a == other.a and self.c == other.c and np.array_equal(self.b, other.b)

    __hash__ = None

    def to_record(self) -> dict:
        return {
            "iter": self.iterate,
            "constraint": self.constraint,
            "a": self.a,
            "b": self.b.tolist(),
            "c": self.c,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "QuadraticCut":
        return cls(rec["a"], rec["b"], rec["c"], rec.get("constraint", -1), rec.get("iter", -1))


def floor_cut(level: float, dimension: int) -> QuadraticCut:
    """``||x||^2 >= level`` written as a cut."""
    return QuadraticCut(1.0, np.zeros(dimension), level, constraint=-1)


def build_cut(con: WeaklyConvexConstraint, x: Array, index: int = -1, iterate: int = -1) -> QuadraticCut:
    """Quadratic tangent minorant of ``con`` at ``x``.

    With ``b`` a subgradient of ``f + a||.||^2`` at ``x`` the cut is
    ``-a||y||^2 + b.y + f(x) + a||x||^2 - b.x``, which agrees with ``f`` at ``x``
    and lies below it everywhere.
    """
    x = np.asarray(x, dtype=float)
    b = con.subgradient(x)
    fx = con(x)
    c = fx + con.curvature * float(x @ x) - float(b @ x)
    return QuadraticCut(con.curvature, b, c, index, iterate)


def ball_of_cut(cut: QuadraticCut, x: Array, f_val: float) -> tuple[Array, float]:
    """Center and radius of the open ball excluded by ``cut`` (built at ``x``)."""
    if cut.a == 0:
        raise DegenerateHalfspace("cut with zero curvature excludes a halfspace")
    if not f_val > 0:
        raise PreconditionViolated(f"f value at the cut point must be positive, got {f_val}")
    center = cut.b / (2.0 * cut.a)
    d = np.asarray(x, dtype=float) - center
    return center, math.sqrt(float(d @ d) + f_val / cut.a)


@dataclass(frozen=True)
class OuterApproximation:
    """Accumulated cuts plus an optional floor ``||x||^2 >= norm_floor``."""

    cuts: tuple[QuadraticCut, ...] = ()
    norm_floor: float | None = None
    last_restart: int = 0

    def __len__(self):
        return len(self.cuts)

    def contains(self, x: Array, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if self.norm_floor is not None and float(x @ x) < self.norm_floor - tol:
            return False
        return all(cut(x) <= tol for cut in self.cuts)

    def as_quadratic_cuts(self, dimension: int) -> list[QuadraticCut]:
        """All constraints as cuts, the floor included."""
        out = list(self.cuts)
        if self.norm_floor is not None and self.norm_floor > 0:
            out.append(floor_cut(self.norm_floor, dimension))
        return out


def append_cuts(oa: OuterApproximation, problem, report: ViolationReport, x: Array, iterate: int = -1) -> OuterApproximation:
    """Add one cut per violated constraint at ``x``."""
    if not report:
        raise PreconditionViolated("no violated constraints to cut")
    new = tuple(build_cut(problem.constraints[i], x, i, iterate) for i in report.indices)
    return OuterApproximation(oa.cuts + new, oa.norm_floor, oa.last_restart)


def restart_set(problem, x: Array, report: ViolationReport, level: float, variant: str, iterate: int = -1) -> OuterApproximation:
    """Outer approximation after a restart.

    ``warm`` keeps the cuts generated at ``x`` plus the floor at ``level``;
    ``inexact`` keeps only the floor.
    """
    if variant == "warm":
        if not report:
            raise PreconditionViolated("warm restart needs violated constraints at the current point")
        cuts = tuple(build_cut(problem.constraints[i], x, i, iterate) for i in report.indices)
    elif variant == "inexact":
        cuts = ()
    else:
        raise ValueError(f"unknown restart variant {variant!r}")
    return OuterApproximation(cuts, float(level), iterate)


def is_redundant_at_level(cut: QuadraticCut, alpha: float) -> bool:
    """Whether every point of the sphere ``||x||^2 = alpha`` satisfies ``cut``."""
    if alpha < 0:
        raise PreconditionViolated("alpha must be nonnegative")
    return float(np.linalg.norm(cut.b)) * math.sqrt(alpha) <= cut.a * alpha - cut.c


@dataclass(frozen=True)
class LevelPolyhedron:
    """Rows ``b.x <= a*alpha - c`` of the non-redundant cuts at level ``alpha``."""

    polyhedron: Polyhedron
    level: float
    sources: tuple[int, ...] = field(default=())

    @property
    def rows(self):
        P = self.polyhedron
        return [(P.G[i], float(P.h[i])) for i in range(P.G.shape[0])]


def linearize_at_level(oa: OuterApproximation, alpha: float, dimension: int | None = None) -> LevelPolyhedron:
    if alpha < 0:
        raise PreconditionViolated("alpha must be nonnegative")
    if dimension is None:
        if not oa.cuts:
            raise ValueError("dimension is required for an empty outer approximation")
        dimension = oa.cuts[0].b.size
    keep = [j for j, cut in enumerate(oa.cuts) if not is_redundant_at_level(cut, alpha)]
    if keep:
        G = np.array([oa.cuts[j].b for j in keep])
        h = np.array([oa.cuts[j].a * alpha - oa.cuts[j].c for j in keep])
    else:
        G = np.zeros((0, dimension))
        h = np.zeros(0)
    return LevelPolyhedron(Polyhedron(G, h), float(alpha), tuple(keep))
