"""Packing equal or unequal circles into the smallest enclosing circle.

Variables are laid out as ``(x_1..x_m, y_1..y_m, p)`` where ``(x_i, y_i)`` is
the center of circle ``i`` and ``p`` is the slack coordinate added by
:func:`cutspheres.model.reformulate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameter
from ..model import Array, Problem, WeaklyConvexConstraint, reformulate

# -(u - v)^2 has Hessian eigenvalues {-4, 0} in (u, v), so adding 2||.||^2
# (Hessian 4I) is the smallest multiple of ||.||^2 that convexifies it.
PAIR_CURVATURE = 2.0


@dataclass(frozen=True)
class PackingSpec:
    radii: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(v) for v in self.radii)
        if len(r) < 2:
            raise InvalidParameter("at least two circles are required")
        if not all(v > 0 and math.isfinite(v) for v in r):
            raise InvalidParameter("radii must be positive and finite")
        object.__setattr__(self, "radii", r)

    @property
    def m(self) -> int:
        return len(self.radii)

    @classmethod
    def unit(cls, m: int) -> "PackingSpec":
        return cls((1.0,) * m)


def centers_of(v: Array, m: int) -> Array:
    """``(m, 2)`` array of circle centers from a point of the packing problem."""
    v = np.asarray(v, dtype=float)
    return np.column_stack([v[:m], v[m : 2 * m]])


def _enclosing(spec: PackingSpec):
    m, r = spec.m, np.array(spec.radii)

    def F(v):
        c = centers_of(v, m)
        return float(np.max((np.linalg.norm(c, axis=1) + r) ** 2))

    def grad(v):
        c = centers_of(v, m)
        norms = np.linalg.norm(c, axis=1)
        vals = (norms + r) ** 2
        i = int(np.argmax(vals))  # smallest index among ties
        g = np.zeros(2 * m)
        if norms[i] > 0:
            u = 2.0 * (norms[i] + r[i]) * c[i] / norms[i]
            g[i], g[m + i] = u
        return g

    # each term (||c_i|| + r_i)^2 is convex, so the max is convex: curvature 0
    return WeaklyConvexConstraint(F, 0.0, grad, "enclosing")


def _pair(spec: PackingSpec, i: int, j: int) -> WeaklyConvexConstraint:
    m = spec.m
    s2 = (spec.radii[i] + spec.radii[j]) ** 2
    ix, jx, iy, jy = i, j, m + i, m + j

    def f(v):
        return -((v[ix] - v[jx]) ** 2) - (v[iy] - v[jy]) ** 2 + s2

    def grad(v):
        g = 2.0 * PAIR_CURVATURE * np.asarray(v, dtype=float)
        dx, dy = v[ix] - v[jx], v[iy] - v[jy]
        g[ix] -= 2 * dx
        g[jx] += 2 * dx
        g[iy] -= 2 * dy
        g[jy] += 2 * dy
        return g

    return WeaklyConvexConstraint(f, PAIR_CURVATURE, grad, f"pair_{i + 1}_{j + 1}")


def build_packing(spec: PackingSpec) -> Problem:
    """Squared-norm form of the packing problem in dimension ``2m + 1``.

    The first constraint is ``F(x, y) - ||(x, y, p)||^2 / m <= 0`` with
    ``F = max_i (||(x_i, y_i)|| + r_i)^2``; the rest keep circles ``i < j`` apart.
    The optimal level equals ``m`` times the squared enclosing radius.
    """
    m = spec.m
    pairs = []
    for i in range(m):
        for j in range(i + 1, m):
            # lift from (x, y) to (x, y, p) is done by reformulate
            pairs.append(_pair(spec, i, j))
    return reformulate(
        _enclosing(spec),
        pairs,
        rho=2.0 / m,
        eta=0.0,
        dimension=2 * m,
        metadata={"kind": "packing", "radii": list(spec.radii)},
    )


def packing_radius_of(v: Array, spec: PackingSpec) -> float:
    """Radius ``max_i ||c_i|| + r_i`` of the enclosing circle centered at the origin."""
    c = centers_of(v, spec.m)
    return float(np.max(np.linalg.norm(c, axis=1) + np.array(spec.radii)))


def optimal_level(spec: PackingSpec, radius: float) -> float:
    """Level ``m * radius^2`` matching an enclosing radius."""
    return spec.m * radius * radius


def overlaps(v: Array, spec: PackingSpec, tol: float = 1e-7) -> list[tuple[int, int]]:
    """Pairs of circles whose interiors intersect by more than ``tol``."""
    c = centers_of(v, spec.m)
    out = []
    for i in range(spec.m):
        for j in range(i + 1, spec.m):
            if np.linalg.norm(c[i] - c[j]) < spec.radii[i] + spec.radii[j] - tol:
                out.append((i, j))
    return out
