"""Problem definition: weakly convex constraints and the squared-distance objective.

The problems solved here have the form

    minimize ||x - z||^2   subject to   f_i(x) <= 0,  i = 1..m,

where each ``f_i`` is weakly convex: ``f_i + a_i ||.||^2`` is convex for the
curvature constant ``a_i`` attached to the constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import numpy.typing as npt

from .errors import InvalidParameter, NonFiniteValue, SubgradientUnavailable

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class WeaklyConvexConstraint:
    """A constraint ``f(x) <= 0`` with a known convexification constant.

    ``convexified_gradient(x)`` must return an element of the convex
    subdifferential of ``f + curvature * ||.||^2`` at ``x``.
    """

    func: Callable[[Array], float]
    curvature: float
    convexified_gradient: Callable[[Array], Array]
    label: str = "f"

    def __post_init__(self):
        if not (self.curvature >= 0 and math.isfinite(self.curvature)):
            raise InvalidParameter(f"curvature must be finite and >= 0, got {self.curvature}")

    @classmethod
    def from_smooth(cls, func, gradient, curvature, label="f"):
        """Build a constraint from a differentiable ``f`` and its gradient."""
        a = float(curvature)

        def cgrad(x):
            return np.asarray(gradient(x), dtype=float) + 2.0 * a * x

        return cls(func=func, curvature=a, convexified_gradient=cgrad, label=label)

    def __call__(self, x: Array) -> float:
        return float(self.func(x))

    def subgradient(self, x: Array) -> Array:
        try:
            b = np.asarray(self.convexified_gradient(x), dtype=float)
        except (ArithmeticError, ValueError) as exc:
            raise SubgradientUnavailable(f"{self.label}: {exc}") from exc
        if b.shape != x.shape or not np.all(np.isfinite(b)):
            raise SubgradientUnavailable(f"{self.label}: bad subgradient {b!r} at {x!r}")
        return b

    def convexified(self, x: Array) -> float:
        """Value of ``f + curvature * ||.||^2`` at ``x``."""
        return self(x) + self.curvature * float(x @ x)

    def shifted(self, z: Array) -> "WeaklyConvexConstraint":
        """The constraint ``u -> f(u + z)`` with the same curvature."""
        z = np.array(z, dtype=float)
        a = self.curvature
        f, g = self.func, self.convexified_gradient
        # b_shift(u) = b(u + z) - 2 a z is a subgradient of f(. + z) + a||.||^2
        return WeaklyConvexConstraint(
            func=lambda u: f(u + z),
            curvature=a,
            convexified_gradient=lambda u: np.asarray(g(u + z), dtype=float) - 2.0 * a * z,
            label=self.label,
        )


@dataclass(frozen=True)
class Problem:
    """``min ||x - z||^2`` over the intersection of the constraint level sets."""

    center: Array
    constraints: tuple[WeaklyConvexConstraint, ...]
    level_cap: float | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        z = np.array(self.center, dtype=float).reshape(-1)
        z.setflags(write=False)
        object.__setattr__(self, "center", z)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        if z.size == 0:
            raise InvalidParameter("dimension must be positive")
        if not self.constraints:
            raise InvalidParameter("at least one constraint is required")

    @property
    def dimension(self) -> int:
        return self.center.size

    def objective(self, x: Array) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return float(d @ d)

    def values(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        out = np.empty(len(self.constraints))
        for i, con in enumerate(self.constraints):
            v = con(x)
            if not math.isfinite(v):
                raise NonFiniteValue(con.label, v)
            out[i] = v
        return out

    def centered(self) -> "Problem":
        """Equivalent problem in the variable ``u = x - z`` (center at the origin)."""
        if not np.any(self.center):
            return self
        return Problem(
            center=np.zeros_like(self.center),
            constraints=tuple(c.shifted(self.center) for c in self.constraints),
            level_cap=self.level_cap,
            metadata={**self.metadata, "shifted_by": self.center.tolist()},
        )


@dataclass(frozen=True)
class ViolationReport:
    indices: tuple[int, ...]
    values: tuple[float, ...]
    all_values: Array

    def __bool__(self):
        return bool(self.indices)

    def __len__(self):
        return len(self.indices)

    @property
    def max_violation(self) -> float:
        return float(np.max(self.all_values, initial=-np.inf))


def violated_set(problem: Problem, x: Array) -> ViolationReport:
    """Indices ``i`` with ``f_i(x) > 0`` (strict, no tolerance)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,) or not np.all(np.isfinite(x)):
        raise InvalidParameter(f"expected a finite point of dimension {problem.dimension}")
    vals = problem.values(x)
    idx = tuple(int(i) for i in np.flatnonzero(vals > 0))
    return ViolationReport(indices=idx, values=tuple(float(vals[i]) for i in idx), all_values=vals)


def _lift(con: WeaklyConvexConstraint) -> WeaklyConvexConstraint:
    # g(ybar) as a function of y = (ybar, y_n); a * y_n^2 keeps the lift convexified
    a = con.curvature
    f, g = con.func, con.convexified_gradient

    def cgrad(y):
        return np.append(np.asarray(g(y[:-1]), dtype=float), 2.0 * a * y[-1])

    return WeaklyConvexConstraint(lambda y: f(y[:-1]), a, cgrad, con.label)


def reformulate(
    objective: WeaklyConvexConstraint,
    constraints: Sequence[WeaklyConvexConstraint],
    rho: float,
    eta: float,
    dimension: int,
    level_cap: float | None = None,
    metadata: Mapping[str, Any] | None = None,
) -> Problem:
    """Turn ``min F(x) s.t. g_i(x) <= 0`` into a squared-norm minimization.

    The returned problem lives in dimension ``dimension + 1`` with variable
    ``y = (x, s)``, center 0 and constraints

        F(x) + eta - (rho/2) ||y||^2 <= 0,     g_i(x) <= 0.

    ``objective.curvature`` is taken as ``beta/2`` for the weak-convexity modulus
    ``beta`` of ``F``; the first constraint then has curvature ``(beta + rho)/2``.
    Solutions map back through :func:`recover_original_solution`, provided the
    set ``{x in Argmin F | F(x) + eta >= (rho/2)||x||^2}`` is nonempty; that
    hypothesis is the caller's to establish and is recorded in ``metadata``.
    """
    if not rho > 0:
        raise InvalidParameter(f"rho must be positive, got {rho}")
    rho = float(rho)
    eta = float(eta)
    a_obj = objective.curvature
    F, gF = objective.func, objective.convexified_gradient

    def first(y):
        return F(y[:-1]) + eta - 0.5 * rho * float(y @ y)

    def first_grad(y):
        # F + eta - (rho/2)||y||^2 + (a_obj + rho/2)||y||^2 = F + a_obj||ybar||^2 + a_obj y_n^2 + eta
        return np.append(np.asarray(gF(y[:-1]), dtype=float), 2.0 * a_obj * y[-1])

    lifted = [WeaklyConvexConstraint(first, a_obj + 0.5 * rho, first_grad, objective.label)]
    lifted.extend(_lift(c) for c in constraints)
    meta = {
        "reformulated": True,
        "rho": rho,
        "eta": eta,
        "original_dimension": int(dimension),
        "assumption": "Argmin F contains a point x with F(x) + eta >= (rho/2)||x||^2",
    }
    meta.update(metadata or {})
    return Problem(np.zeros(dimension + 1), tuple(lifted), level_cap, meta)


def recover_original_solution(problem: Problem, y: Array) -> Array:
    """Drop the slack coordinate of a reformulated problem's point."""
    y = np.asarray(y, dtype=float)
    return y[:-1].copy()
