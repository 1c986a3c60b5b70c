"""Polyhedral subproblems: projection, norm maximization and sphere feasibility.

Everything here works on polyhedra ``{x : G x <= h}``. The central routine,
:func:`sphere_polyhedron_feasibility`, decides whether the sphere
``||x||^2 = alpha`` meets such a polyhedron. It uses a min-norm point ``x1`` of
the polyhedron and a point ``x2`` with ``||x2||^2 >= alpha``; the segment between
them crosses the sphere inside the polyhedron.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import numpy.typing as npt
from scipy.optimize import linprog, nnls

from .errors import InfeasiblePolyhedron, IterationLimit, PreconditionViolated

log = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class Polyhedron:
    G: Array
    h: Array

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        h = np.array(self.h, dtype=float).reshape(-1)
        if G.ndim != 2 or G.shape[0] != h.size:
            raise ValueError(f"inconsistent shapes {G.shape} and {h.shape}")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(h))):
            raise ValueError("polyhedron data must be finite")
        G.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @classmethod
    def from_rows(cls, rows, dimension=None):
        rows = list(rows)
        if not rows:
            return cls(np.zeros((0, dimension)), np.zeros(0))
        return cls(np.array([g for g, _ in rows]), np.array([hh for _, hh in rows]))

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        eye = np.eye(lower.size)
        return cls(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @property
    def dimension(self) -> int:
        return self.G.shape[1]

    @property
    def n_rows(self) -> int:
        return self.G.shape[0]

    def residuals(self, x: Array) -> Array:
        return self.G @ x - self.h

    def slack_tolerance(self, x: Array, abs_tol=1e-8, rel_tol=1e-8) -> Array:
        scale = np.abs(self.h) + np.linalg.norm(self.G, axis=1) * float(np.linalg.norm(x))
        return abs_tol + rel_tol * scale

    def contains(self, x: Array, abs_tol=1e-8, rel_tol=1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        if self.n_rows == 0:
            return True
        return bool(np.all(self.residuals(x) <= self.slack_tolerance(x, abs_tol, rel_tol)))

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        return Polyhedron(np.vstack([self.G, other.G]), np.concatenate([self.h, other.h]))


@dataclass(frozen=True)
class GeometryConfig:
    membership_abs_tol: float = 1e-8
    membership_rel_tol: float = 1e-8
    sphere_rel_tol: float = 1e-9
    projection_tol: float = 1e-10
    hildreth_sweeps: int = 60
    multistart: int = 4
    ascent_steps: int = 25
    # vertex enumeration by row subsets is used below these caps
    enum_max_dim: int = 10
    enum_max_rows: int = 40
    enum_max_subsets: int = 300_000
    # branch and bound node budget beyond the caps; 0 disables it
    bnb_max_nodes: int = 4000
    seed: int = 0

    def tolerances(self):
        return self.membership_abs_tol, self.membership_rel_tol


# -- projection ----------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    x: Array
    multipliers: Array
    method: str
    primal_residual: float
    complementarity: float
    converged: bool


def _normalized(P: Polyhedron, tol: float):
    norms = np.linalg.norm(P.G, axis=1)
    zero = norms <= 1e-300
    if np.any(P.h[zero] < -tol):
        bad = np.flatnonzero(zero & (P.h < -tol))
        cert = np.zeros(P.n_rows)
        cert[bad[0]] = 1.0
        raise InfeasiblePolyhedron("row 0.x <= h with h < 0", certificate=cert)
    keep = np.flatnonzero(~zero)
    return keep, P.G[keep] / norms[keep, None], P.h[keep] / norms[keep], norms[keep]


def _certify(Gn, hn, x, lam):
    r = Gn @ x - hn
    primal = float(np.max(r, initial=0.0))
    comp = float(np.max(np.abs(lam * r), initial=0.0))
    return max(primal, 0.0), comp


def _hildreth(Gn, hn, z, sweeps, tol):
    m = Gn.shape[0]
    gram = Gn @ Gn.T
    lam = np.zeros(m)
    s = Gn @ z - hn  # s = Gn x - hn with x = z - Gn.T lam
    for _ in range(sweeps):
        for i in range(m):
            new = lam[i] + s[i]
            if new < 0.0:
                new = 0.0
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                s -= d * gram[:, i]
        x = z - Gn.T @ lam
        primal, comp = _certify(Gn, hn, x, lam)
        if primal <= tol and comp <= tol:
            return x, lam, True
        if not np.isfinite(lam).all() or lam.max(initial=0.0) > 1e12:
            break
    return z - Gn.T @ lam, lam, False


def _least_distance(Gn, hn, z, tol):
    """Lawson-Hanson least distance programming through NNLS."""
    # min ||w|| s.t. A w >= c with A = -Gn, c = Gn z - hn, x = z + w
    A = -Gn
    c = Gn @ z - hn
    n = Gn.shape[1]
    E = np.vstack([A.T, c[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * max(E.shape))
    r = E @ u - f
    if np.linalg.norm(r) <= 1e-11 or r[-1] >= -1e-14:
        raise InfeasiblePolyhedron("least-distance dual found a Farkas certificate", certificate=u)
    lam = u / (-r[-1])
    w = -r[:n] / r[-1]
    return z + w, lam


def project_onto_polyhedron(P: Polyhedron, z: Array, tol: float = 1e-10, max_iter: int = 60) -> ProjectionResult:
    """Euclidean projection of ``z`` onto ``P``.

    Dual coordinate ascent on the row multipliers (Hildreth) runs first; if it
    does not certify primal feasibility and complementarity to ``tol`` within
    ``max_iter`` sweeps, the problem is re-solved exactly as a least-distance
    program by active-set NNLS, which also detects emptiness.

    Raises :class:`InfeasiblePolyhedron` when ``P`` is empty and
    :class:`IterationLimit` when neither route certifies the result.
    """
    if tol <= 0:
        raise PreconditionViolated("tol must be positive")
    z = np.asarray(z, dtype=float)
    keep, Gn, hn, norms = _normalized(P, tol)
    lam_full = np.zeros(P.n_rows)
    if Gn.shape[0] == 0:
        return ProjectionResult(z.copy(), lam_full, "trivial", 0.0, 0.0, True)
    if np.all(Gn @ z - hn <= tol):
        return ProjectionResult(z.copy(), lam_full, "trivial", 0.0, 0.0, True)

    x, lam, ok = _hildreth(Gn, hn, z, max_iter, tol)
    method = "hildreth"
    if not ok:
        x, lam = _least_distance(Gn, hn, z, tol)
        method = "least-distance"
        primal, comp = _certify(Gn, hn, x, lam)
        if primal > tol or comp > tol:
            # clean up rounding from the active-set solve
            x2, lam2, ok2 = _hildreth_warm(Gn, hn, z, lam, max_iter, tol)
            if ok2:
                x, lam = x2, lam2
    primal, comp = _certify(Gn, hn, x, lam)
    converged = primal <= tol and comp <= tol
    lam_full[keep] = lam / norms
    if not converged:
        scale = 1.0 + float(np.linalg.norm(z))
        if primal > 1e3 * tol * scale or comp > 1e3 * tol * scale:
            raise IterationLimit(
                "projection did not certify",
                best=x,
                residuals={"primal": primal, "complementarity": comp},
            )
    return ProjectionResult(x, lam_full, method, primal, comp, converged)


def _hildreth_warm(Gn, hn, z, lam0, sweeps, tol):
    gram = Gn @ Gn.T
    lam = lam0.copy()
    s = Gn @ (z - Gn.T @ lam) - hn
    for _ in range(sweeps):
        for i in range(lam.size):
            new = max(0.0, lam[i] + s[i])
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                s -= d * gram[:, i]
        x = z - Gn.T @ lam
        primal, comp = _certify(Gn, hn, x, lam)
        if primal <= tol and comp <= tol:
            return x, lam, True
    return z - Gn.T @ lam, lam, False


# -- norm maximization -----------------------------------------------------------


@dataclass(frozen=True)
class MaxNormResult:
    """Outcome of maximizing ``||x||^2`` over a polyhedron.

    ``kind`` is ``"reached"`` (``point`` has squared norm at least the target),
    ``"bounded"`` (the maximum is below the target; ``value`` is the best value
    found and ``upper_bound`` a bound on the maximum) or ``"unbounded"``.
    ``certified`` is False when the bound comes from a heuristic only.
    """

    kind: str
    point: Array | None
    value: float
    upper_bound: float
    certified: bool
    method: str


def _lp_max(c, G, h, lo, hi):
    res = linprog(
        -c,
        A_ub=G if G.shape[0] else None,
        b_ub=h if G.shape[0] else None,
        bounds=np.column_stack([lo, hi]),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return None, -np.inf
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return res.x, -res.fun


def _pull_inside(x, anchor, P, tols):
    """Move ``x`` toward ``anchor`` until it passes the membership test."""
    if P.contains(x, *tols):
        return x
    for t in (1 - 1e-12, 1 - 1e-10, 1 - 1e-8, 1 - 1e-6):
        y = anchor + t * (x - anchor)
        if P.contains(y, *tols):
            return y
    return None


def _vertex_candidates(G, h, tol=1e-9, chunk=50_000):
    """All vertices of ``{G x <= h}`` by solving every n-row subsystem."""
    m, n = G.shape
    if m < n:
        return np.zeros((0, n))
    out = []
    combos = combinations(range(m), n)
    while True:
        block = np.array(list(_take(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        A = G[block]
        b = h[block]
        det = np.linalg.det(A)
        ok = np.abs(det) > 1e-10
        if not np.any(ok):
            continue
        X = np.linalg.solve(A[ok], b[ok][..., None])[..., 0]
        resid = X @ G.T - h
        scale = tol * (1.0 + np.abs(h)[None, :] + np.linalg.norm(X, axis=1)[:, None])
        feas = np.all(resid <= scale, axis=1)
        out.append(X[feas])
    if not out:
        return np.zeros((0, n))
    return np.vstack(out)


def _take(it, k):
    for _, item in zip(range(k), it):
        yield item


def _enumerable(m, n, cfg):
    return n <= cfg.enum_max_dim and m <= cfg.enum_max_rows and math.comb(m, n) <= cfg.enum_max_subsets


def _recession_ray(P: Polyhedron):
    """A nonzero direction ``d`` with ``G d <= 0``, or None."""
    n = P.dimension
    G = P.G / np.maximum(np.linalg.norm(P.G, axis=1, keepdims=True), 1e-300)
    zeros = np.zeros(G.shape[0])
    lo, hi = -np.ones(n), np.ones(n)
    for j in range(n):
        for s in (1.0, -1.0):
            c = np.zeros(n)
            c[j] = s
            d, val = _lp_max(c, G, zeros, lo, hi)
            if d is not None and val > 1e-9:
                return d
    return None


def max_norm_over_polyhedron(
    P: Polyhedron,
    target: float,
    cfg: GeometryConfig | None = None,
    hint: Array | None = None,
) -> MaxNormResult:
    """Maximize ``||x||^2`` over ``P``, stopping early once ``target`` is reached.

    With a finite ``target`` the search runs over ``P`` clipped to the box
    ``[-R, R]^n``, ``R >= sqrt(target)``. When ``P`` contains a point of norm
    below ``sqrt(target)`` the clipped maximum is below ``target`` exactly when
    the unclipped one is, so a bound certified on the box holds for ``P``.

    Certification is by vertex enumeration over row subsets when the instance
    is small enough, and by spatial branch and bound with secant (concave
    envelope) LP bounds otherwise.
    """
    cfg = cfg or GeometryConfig()
    if target < 0:
        raise PreconditionViolated("target must be nonnegative")
    tols = cfg.tolerances()
    n = P.dimension
    if hint is None:
        hint = project_onto_polyhedron(P, np.zeros(n), cfg.projection_tol).x
    hint = np.asarray(hint, dtype=float)
    hval = float(hint @ hint)
    if hval >= target:
        return MaxNormResult("reached", hint, hval, np.inf, True, "hint")

    if math.isinf(target):
        ray = _recession_ray(P)
        if ray is not None:
            return MaxNormResult("unbounded", ray, np.inf, np.inf, True, "recession-lp")
        if _enumerable(P.n_rows, n, cfg):
            V = _vertex_candidates(P.G, P.h)
            norms = np.einsum("ij,ij->i", V, V)
            k = int(np.argmax(norms))
            return MaxNormResult("bounded", V[k], float(norms[k]), float(norms[k]), True, "enumeration")
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        x, val = _ascend(P, 2.0 * hint, lo, hi, cfg.ascent_steps)
        if x is None or val < hval:
            x, val = hint, hval
        return MaxNormResult("bounded", x, val, np.inf, False, "heuristic")

    R = math.sqrt(target) * (1.0 + 1e-7) + 1e-9
    lo, hi = np.full(n, -R), np.full(n, R)
    rng = np.random.default_rng(cfg.seed)

    best, bval = hint, hval
    starts = [2.0 * hint] + [rng.standard_normal(n) for _ in range(cfg.multistart)]
    for c in starts:
        x, val = _ascend(P, c, lo, hi, cfg.ascent_steps)
        if x is None:
            continue
        if val >= target:
            y = _pull_inside(x, hint, P, tols)
            if y is not None and float(y @ y) >= target:
                return MaxNormResult("reached", y, float(y @ y), np.inf, True, "ascent")
        if val > bval:
            best, bval = x, val

    Q = P.intersect(Polyhedron.box(lo, hi))
    if _enumerable(Q.n_rows, n, cfg):
        V = _vertex_candidates(Q.G, Q.h)
        if V.shape[0]:
            norms = np.einsum("ij,ij->i", V, V)
            k = int(np.argmax(norms))
            if norms[k] >= target:
                y = _pull_inside(V[k], hint, P, tols)
                if y is not None and float(y @ y) >= target:
                    return MaxNormResult("reached", y, float(y @ y), np.inf, True, "enumeration")
            else:
                return MaxNormResult("bounded", V[k], float(norms[k]), float(norms[k]), True, "enumeration")
    if cfg.bnb_max_nodes > 0:
        lo2, hi2 = _coordinate_bounds(P, lo, hi)
        res = _branch_and_bound(P, target, lo2, hi2, hint, cfg, incumbent=(best, bval))
        if res.kind == "reached":
            y = _pull_inside(res.point, hint, P, tols)
            if y is not None and float(y @ y) >= target:
                return MaxNormResult("reached", y, float(y @ y), np.inf, True, res.method)
        else:
            return res
    return MaxNormResult("bounded", best, bval, np.inf, False, "heuristic")


def _ascend(P, c, lo, hi, steps):
    x, _ = _lp_max(c, P.G, P.h, lo, hi)
    if x is None:
        return None, -np.inf
    val = float(x @ x)
    for _ in range(steps):
        y, _ = _lp_max(2.0 * x, P.G, P.h, lo, hi)
        if y is None:
            break
        yval = float(y @ y)
        if yval <= val * (1 + 1e-12) + 1e-15:
            break
        x, val = y, yval
    return x, val


def _coordinate_bounds(P, lo, hi):
    n = P.dimension
    lo2, hi2 = lo.copy(), hi.copy()
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        x, v = _lp_max(e, P.G, P.h, lo, hi)
        if x is not None and np.isfinite(v):
            hi2[j] = min(hi[j], v + 1e-9 * (1 + abs(v)))
        x, v = _lp_max(-e, P.G, P.h, lo, hi)
        if x is not None and np.isfinite(v):
            lo2[j] = max(lo[j], -v - 1e-9 * (1 + abs(v)))
    return lo2, hi2


def _branch_and_bound(P, target, lo, hi, hint, cfg, incumbent=None):
    """Best-first spatial branch and bound for ``max ||x||^2`` over ``P`` in a box.

    Each node relaxes ``x_i^2`` by its secant on ``[lo_i, hi_i]``, which is an
    upper bound; nodes whose bound falls below ``target`` are discarded.
    """
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return MaxNormResult("bounded", hint, float(hint @ hint), np.inf, False, "bnb")
    best, bval = incumbent if incumbent is not None else (hint, float(hint @ hint))
    pruned_ub = -np.inf

    def bound(l, u):
        c = l + u
        x, v = _lp_max(c, P.G, P.h, l, u)
        if x is None:
            return None, -np.inf
        return x, v - float(l @ u)

    x0, ub0 = bound(lo, hi)
    if x0 is None:
        return MaxNormResult("bounded", best, bval, -np.inf, True, "bnb")
    heap = [(-ub0, 0, lo, hi, x0)]
    counter = 1
    nodes = 0
    while heap:
        neg_ub, _, l, u, x = heapq.heappop(heap)
        ub = -neg_ub
        if ub < target:
            pruned_ub = max(pruned_ub, ub)
            heap.clear()
            break
        xv = float(x @ x)
        if xv > bval:
            best, bval = x, xv
        if xv >= target:
            return MaxNormResult("reached", x, xv, ub, True, "bnb")
        nodes += 1
        if nodes > cfg.bnb_max_nodes:
            heapq.heappush(heap, (neg_ub, counter, l, u, x))
            break
        gaps = (u - x) * (x - l)
        j = int(np.argmax(gaps * (u - l)))
        width = u[j] - l[j]
        split = x[j]
        if not (l[j] + 0.05 * width < split < u[j] - 0.05 * width):
            split = 0.5 * (l[j] + u[j])
        for side in (0, 1):
            l2, u2 = l.copy(), u.copy()
            if side == 0:
                u2[j] = split
            else:
                l2[j] = split
            xc, ubc = bound(l2, u2)
            if xc is None:
                continue
            if ubc < target:
                pruned_ub = max(pruned_ub, ubc)
                cval = float(xc @ xc)
                if cval > bval:
                    best, bval = xc, cval
                continue
            heapq.heappush(heap, (-ubc, counter, l2, u2, xc))
            counter += 1
    if heap:
        open_ub = max(-item[0] for item in heap)
        log.debug("branch and bound stopped after %d nodes, open bound %.6g", nodes, open_ub)
        return MaxNormResult("bounded", best, bval, max(open_ub, pruned_ub), False, "bnb")
    return MaxNormResult("bounded", best, bval, max(pruned_ub, bval), True, "bnb")


# -- sphere feasibility ----------------------------------------------------------


def segment_sphere_intersection(x1: Array, x2: Array, alpha: float, rel_tol: float = 1e-9) -> Array:
    """Point ``x1 + t (x2 - x1)``, ``t`` in [0, 1], with ``||x||^2 = alpha``.

    Requires ``||x1||^2 <= alpha <= ||x2||^2``; the smallest such ``t`` is used.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n1 = float(x1 @ x1)
    n2 = float(x2 @ x2)
    slack = rel_tol * max(alpha, 1.0)
    if n1 > alpha + slack or n2 < alpha - slack:
        raise PreconditionViolated(f"need ||x1||^2 <= alpha <= ||x2||^2, got {n1}, {alpha}, {n2}")
    c = n1 - alpha
    if c >= 0:
        return x1.copy()
    d = x2 - x1
    a = float(d @ d)
    beta = float(x1 @ d)
    disc = math.sqrt(max(beta * beta - a * c, 0.0))
    # positive root of a t^2 + 2 beta t + c, c < 0, in a cancellation-free form
    t = -c / (beta + disc) if beta > 0 else (disc - beta) / a
    t = min(max(t, 0.0), 1.0)
    x = x1 + t * d
    nx = float(x @ x)
    if nx > 0:
        x = x * math.sqrt(alpha / nx)
    return x


@dataclass(frozen=True)
class FeasibilityOutcome:
    """Result of looking for a point on ``||x||^2 = alpha`` inside a polyhedron.

    ``kind`` is ``"point"`` or ``"empty"``. ``branch`` records how the answer was
    reached: ``infeasible_polyhedron``, ``min_norm`` (polyhedron outside the
    ball), ``max_norm`` (polyhedron inside the open ball) or ``segment``.
    """

    kind: str
    point: Array | None
    branch: str
    certified: bool = True
    min_norm_sq: float | None = None
    max_norm_sq: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def is_point(self):
        return self.kind == "point"


def sphere_polyhedron_feasibility(P: Polyhedron, alpha: float, cfg: GeometryConfig | None = None) -> FeasibilityOutcome:
    cfg = cfg or GeometryConfig()
    if alpha < 0:
        raise PreconditionViolated("alpha must be nonnegative")
    tols = cfg.tolerances()
    n = P.dimension
    try:
        proj = project_onto_polyhedron(P, np.zeros(n), cfg.projection_tol, cfg.hildreth_sweeps)
    except InfeasiblePolyhedron:
        return FeasibilityOutcome("empty", None, "infeasible_polyhedron")
    x1 = proj.x
    n1 = float(x1 @ x1)
    slack = cfg.sphere_rel_tol * max(alpha, 1.0)
    if n1 > alpha + slack:
        return FeasibilityOutcome("empty", None, "min_norm", min_norm_sq=n1)
    if n1 > alpha:
        y = x1 * math.sqrt(alpha / n1)
        if P.contains(y, *tols):
            return FeasibilityOutcome("point", y, "min_norm", min_norm_sq=n1)
        return FeasibilityOutcome("empty", None, "min_norm", min_norm_sq=n1)

    res = max_norm_over_polyhedron(P, alpha, cfg, hint=x1)
    if res.kind == "bounded":
        return FeasibilityOutcome(
            "empty",
            None,
            "max_norm",
            certified=res.certified,
            min_norm_sq=n1,
            max_norm_sq=res.value,
            details={"method": res.method, "upper_bound": res.upper_bound},
        )
    x = segment_sphere_intersection(x1, res.point, alpha, cfg.sphere_rel_tol)
    return FeasibilityOutcome(
        "point", x, "segment", min_norm_sq=n1, max_norm_sq=res.value, details={"method": res.method}
    )
