"""Slow brute-force reference solvers for small instances.

None of these share numerical code with :mod:`cutspheres.geometry`; they exist
to check it and to stand in as a global subsolver on desk-sized problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np
from scipy.optimize import minimize

from .errors import BudgetExceeded, InfeasiblePolyhedron, UnboundedPolyhedron


@dataclass(frozen=True)
class OracleBudget:
    grid_points: int = 200_000  # ceiling on grid evaluations
    polish_starts: int = 12
    max_dim: int = 4
    max_rows: int = 12
    max_vertex_rows: int = 25
    max_vertex_dim: int = 10
    radius: float | None = None  # half-width of the search box around z


@dataclass(frozen=True)
class OracleResult:
    x: np.ndarray
    value: float
    certificate: str
    gap: float


# -- S-QCQP --------------------------------------------------------------------


def _cut_arrays(cuts, n):
    a = np.array([c.a for c in cuts], dtype=float)
    B = np.array([c.b for c in cuts], dtype=float).reshape(len(cuts), n)
    c = np.array([c.c for c in cuts], dtype=float)
    return a, B, c


def _search_radius(a, B, c, z, budget):
    if budget.radius is not None:
        return float(budget.radius)
    if a.size == 0:
        return 1.0
    if np.any(a <= 0):
        raise BudgetExceeded("a search radius is required when halfspace cuts are present")
    # a point outside every excluded ball is feasible, so J* is at most this
    centers = B / (2 * a[:, None])
    r2 = np.einsum("ij,ij->i", centers, centers) + c / a
    reach = np.linalg.norm(centers - z, axis=1) + np.sqrt(np.maximum(r2, 0.0))
    return float(reach.max()) + 1e-6


def brute_force_sqcqp(cuts, z, budget: OracleBudget | None = None) -> OracleResult:
    """Globally minimize ``||x - z||^2`` subject to ``-a||x||^2 + b.x + c <= 0``.

    A dense grid over a box around ``z`` locates the basin; the best grid points,
    ``z`` itself and the projections of ``z`` onto each cut boundary are then
    polished with SLSQP. The certificate is "sampled": ``gap`` bounds how much
    the objective varies within one grid cell.
    """
    budget = budget or OracleBudget()
    z = np.asarray(z, dtype=float)
    n = z.size
    if n > budget.max_dim:
        raise BudgetExceeded(f"dimension {n} exceeds oracle cap {budget.max_dim}")
    cuts = list(cuts)
    if not cuts:
        return OracleResult(z.copy(), 0.0, "exact", 0.0)
    a, B, c = _cut_arrays(cuts, n)

    def qvals(X):
        return -a[None, :] * np.einsum("ij,ij->i", X, X)[:, None] + X @ B.T + c[None, :]

    if np.all(qvals(z[None, :]) <= 0):
        return OracleResult(z.copy(), 0.0, "exact", 0.0)

    R = _search_radius(a, B, c, z, budget)
    per_axis = max(3, int(budget.grid_points ** (1.0 / n)))
    axes = [np.linspace(z[j] - R, z[j] + R, per_axis) for j in range(n)]
    X = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    feas = np.all(qvals(X) <= 0, axis=1)
    J = np.einsum("ij,ij->i", X - z, X - z)
    cell = 2 * R / (per_axis - 1) * math.sqrt(n)

    starts = []
    if np.any(feas):
        idx = np.flatnonzero(feas)
        order = idx[np.argsort(J[idx], kind="stable")[: budget.polish_starts]]
        starts.extend(X[order])
    for k in range(len(cuts)):
        if a[k] > 0:
            center = B[k] / (2 * a[k])
            rad2 = float(center @ center + c[k] / a[k])
            if rad2 <= 0:
                continue
            d = z - center
            nd = np.linalg.norm(d)
            u = d / nd if nd > 0 else np.eye(n)[0]
            starts.append(center + math.sqrt(rad2) * (1 + 1e-9) * u)
        else:
            nb = float(B[k] @ B[k])
            if nb > 0:
                starts.append(z - (float(B[k] @ z) + c[k]) / nb * B[k])

    cons = {"type": "ineq", "fun": lambda x: -qvals(x[None, :])[0], "jac": lambda x: -(B - 2 * a[:, None] * x[None, :])}
    best_x, best_v = None, np.inf
    for x0 in starts:
        res = minimize(
            lambda x: float((x - z) @ (x - z)),
            x0,
            jac=lambda x: 2 * (x - z),
            constraints=[cons],
            method="SLSQP",
            options={"ftol": 1e-14, "maxiter": 200},
        )
        x = res.x
        if np.all(qvals(x[None, :]) <= 1e-9 * (1 + np.abs(c))):
            v = float((x - z) @ (x - z))
            if v < best_v:
                best_x, best_v = x, v
    if best_x is None:
        if not np.any(feas):
            raise BudgetExceeded("no feasible point found in the search box")
        k = int(np.flatnonzero(feas)[np.argmin(J[feas])])
        best_x, best_v = X[k], float(J[k])
    gap = 2 * math.sqrt(best_v) * cell + cell * cell
    return OracleResult(best_x, best_v, "sampled", gap)


def brute_force_minimize(constraints, z, radius, grid_points=200_000, polish_starts=12) -> OracleResult:
    """Sampled global minimum of ``||x - z||^2`` under arbitrary ``f_i(x) <= 0``.

    Used for reference optima of whole (low-dimensional) problems.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    per_axis = max(3, int(grid_points ** (1.0 / n)))
    axes = [np.linspace(z[j] - radius, z[j] + radius, per_axis) for j in range(n)]
    X = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T
    F = np.array([[f(x) for f in constraints] for x in X])
    feas = np.all(F <= 0, axis=1)
    if not np.any(feas):
        raise BudgetExceeded("no feasible grid point")
    J = np.einsum("ij,ij->i", X - z, X - z)
    idx = np.flatnonzero(feas)
    order = idx[np.argsort(J[idx], kind="stable")[:polish_starts]]
    cons = [{"type": "ineq", "fun": (lambda x, f=f: -f(x))} for f in constraints]
    best_x, best_v = X[order[0]], float(J[order[0]])
    for x0 in X[order]:
        res = minimize(lambda x: float((x - z) @ (x - z)), x0, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-14, "maxiter": 300})
        if all(f(res.x) <= 1e-10 for f in constraints):
            v = float((res.x - z) @ (res.x - z))
            if v < best_v:
                best_x, best_v = res.x, v
    cell = 2 * radius / (per_axis - 1) * math.sqrt(n)
    return OracleResult(best_x, best_v, "sampled", 2 * math.sqrt(best_v) * cell + cell * cell)


# -- polyhedra -----------------------------------------------------------------


def exact_projection_qp(P, z, tol: float = 1e-9):
    """Projection of ``z`` onto ``{G x <= h}`` by enumerating active sets.

    For each row subset S of size at most n, the equality-constrained problem
    ``min ||x - z||^2 s.t. G_S x = h_S`` is solved; the candidate that is primal
    feasible with nonnegative multipliers is the projection.
    """
    G, h = np.asarray(P.G, dtype=float), np.asarray(P.h, dtype=float)
    z = np.asarray(z, dtype=float)
    m, n = G.shape
    if m > 12 or n > 6:
        raise BudgetExceeded(f"exact projection is capped at 12 rows and 6 dimensions, got {m}x{n}")
    best, best_d = None, np.inf
    for size in range(0, min(m, n) + 1):
        for S in combinations(range(m), size):
            S = list(S)
            if size:
                GS = G[S]
                if np.linalg.matrix_rank(GS) < size:
                    continue
                mu = np.linalg.solve(GS @ GS.T, GS @ z - h[S])
                if np.any(mu < -tol):
                    continue
                x = z - GS.T @ mu
            else:
                x = z.copy()
            if np.all(G @ x - h <= tol * (1 + np.abs(h))):
                d = float((x - z) @ (x - z))
                if d < best_d:
                    best, best_d = x, d
    if best is None:
        _confirm_empty_on_grid(G, h, z)
        raise InfeasiblePolyhedron("no active set yields a feasible point")
    return best


def _confirm_empty_on_grid(G, h, z, per_axis=21, radius=10.0):
    n = G.shape[1]
    axes = [np.linspace(z[j] - radius, z[j] + radius, per_axis) for j in range(n)]
    for p in product(*axes):
        if np.all(G @ np.array(p) <= h):
            raise AssertionError("grid found a feasible point of a polyhedron declared empty")


def enumerate_vertices(P, tol: float = 1e-9):
    """Vertices of a bounded polyhedron ``{G x <= h}``.

    Raises :class:`UnboundedPolyhedron` with a recession ray when one exists.
    """
    G, h = np.asarray(P.G, dtype=float), np.asarray(P.h, dtype=float)
    m, n = G.shape
    if m > 25 or n > 10:
        raise BudgetExceeded(f"vertex enumeration is capped at 25 rows and 10 dimensions, got {m}x{n}")
    verts = []
    for S in combinations(range(m), n):
        GS = G[list(S)]
        if np.linalg.matrix_rank(GS) < n:
            continue
        x = np.linalg.lstsq(GS, h[list(S)], rcond=None)[0]
        if np.all(G @ x - h <= tol * (1 + np.abs(h) + np.linalg.norm(x))):
            if not any(np.linalg.norm(x - v) <= tol for v in verts):
                verts.append(x)
    if verts:
        ray = _ray(G, tol)
        if ray is not None:
            raise UnboundedPolyhedron(ray)
    elif m and np.linalg.matrix_rank(G) == n:
        raise InfeasiblePolyhedron("no vertex found")
    else:
        ray = _ray(G, tol)
        raise UnboundedPolyhedron(ray if ray is not None else np.eye(n)[0])
    return np.array(verts)


def _ray(G, tol):
    """A direction d != 0 with G d <= 0, found among (n-1)-row null spaces."""
    m, n = G.shape
    if m == 0 or np.linalg.matrix_rank(G) < n:
        # nontrivial null space: a whole line is a recession direction
        _, _, vt = np.linalg.svd(G if m else np.zeros((1, n)))
        return vt[-1]
    for S in combinations(range(m), n - 1):
        GS = G[list(S)]
        if n > 1 and np.linalg.matrix_rank(GS) < n - 1:
            continue
        _, _, vt = np.linalg.svd(GS if n > 1 else np.zeros((1, n)))
        d = vt[-1]
        for s in (1.0, -1.0):
            if np.all(G @ (s * d) <= tol):
                return s * d
    return None
