import math

import numpy as np
import pytest

from cutspheres.errors import InvalidParameter, NonFiniteValue, SubgradientUnavailable
from cutspheres.model import Problem, WeaklyConvexConstraint, recover_original_solution, reformulate, violated_set
from cutspheres.problems import PackingSpec, build_packing

from helpers import fd_gradient


def norm_minus_one():
    return WeaklyConvexConstraint.from_smooth(lambda x: float(x @ x) - 1.0, lambda x: 2 * x, 0.0, "ball")


def test_violated_set_feasible_origin():
    p = Problem(np.zeros(2), [norm_minus_one()])
    rep = violated_set(p, np.zeros(2))
    assert rep.indices == ()
    assert not rep


def test_violated_set_reports_value():
    p = Problem(np.zeros(2), [norm_minus_one()])
    rep = violated_set(p, np.array([2.0, 0.0]))
    assert rep.indices == (0,)
    assert rep.values == (3.0,)


def test_violated_set_is_strict():
    p = Problem(np.zeros(2), [norm_minus_one()])
    assert not violated_set(p, np.array([1.0, 0.0]))


def test_packing_coincident_centers_violate_pair():
    p = build_packing(PackingSpec.unit(2))
    rep = violated_set(p, np.zeros(5))
    # pair constraint is index 1; the enclosing one is F(0) = 1 > 0 too
    assert 1 in rep.indices
    assert rep.all_values[1] == 4.0


def test_non_finite_value_raises():
    c = WeaklyConvexConstraint(lambda x: math.nan, 0.0, lambda x: np.zeros_like(x), "bad")
    with pytest.raises(NonFiniteValue):
        violated_set(Problem(np.zeros(1), [c]), np.zeros(1))


def test_bad_point_shape_rejected():
    p = Problem(np.zeros(2), [norm_minus_one()])
    with pytest.raises(InvalidParameter):
        violated_set(p, np.zeros(3))


def test_negative_curvature_rejected():
    with pytest.raises(InvalidParameter):
        WeaklyConvexConstraint(lambda x: 0.0, -1.0, lambda x: x)


def test_subgradient_validation():
    c = WeaklyConvexConstraint(lambda x: 0.0, 0.0, lambda x: np.full(x.size, np.inf))
    with pytest.raises(SubgradientUnavailable):
        c.subgradient(np.zeros(2))


def test_problem_is_immutable():
    p = Problem([1.0, 2.0], [norm_minus_one()])
    with pytest.raises(ValueError):
        p.center[0] = 5.0
    with pytest.raises(TypeError):
        p.metadata["x"] = 1


def test_shifted_constraint_gradient_matches_fd():
    c = WeaklyConvexConstraint.from_smooth(
        lambda x: math.sin(x[0]) - x[1] ** 2, lambda x: np.array([math.cos(x[0]), -2 * x[1]]), 1.0
    )
    z = np.array([0.3, -1.2])
    s = c.shifted(z)
    u = np.array([0.7, 0.4])
    assert s(u) == pytest.approx(c(u + z))
    cvx = lambda v: s(v) + s.curvature * float(v @ v)
    assert np.allclose(s.subgradient(u), fd_gradient(cvx, u), atol=1e-6)


def test_reformulate_convex_objective():
    F = WeaklyConvexConstraint.from_smooth(lambda x: float(x @ x), lambda x: 2 * x, 0.0, "F")
    p = reformulate(F, [], rho=2.0, eta=0.0, dimension=2)
    y = np.array([0.5, -1.0, 2.0])
    assert p.dimension == 3
    assert p.constraints[0].curvature == 1.0
    assert p.constraints[0](y) == pytest.approx(0.25 + 1.0 - float(y @ y))
    assert p.metadata["reformulated"] and "assumption" in p.metadata


def test_reformulate_rejects_nonpositive_rho():
    F = WeaklyConvexConstraint.from_smooth(lambda x: 0.0, lambda x: 0 * x, 0.0)
    with pytest.raises(InvalidParameter):
        reformulate(F, [], rho=0.0, eta=0.0, dimension=1)


def test_reformulate_lifted_constraints_keep_curvature():
    F = WeaklyConvexConstraint.from_smooth(lambda x: 0.0, lambda x: 0 * x, 0.0)
    g = WeaklyConvexConstraint.from_smooth(lambda x: 1 - float(x @ x), lambda x: -2 * x, 1.0)
    p = reformulate(F, [g], rho=1.0, eta=0.0, dimension=2)
    assert p.constraints[1].curvature == 1.0
    y = np.array([0.1, 0.2, 5.0])
    assert p.constraints[1](y) == pytest.approx(g(y[:2]))
    # the lifted subgradient covers the slack coordinate of f + a||y||^2
    cvx = lambda v: p.constraints[1].convexified(v)
    assert np.allclose(p.constraints[1].subgradient(y), fd_gradient(cvx, y), atol=1e-5)


def test_four_circle_reformulation_constraint():
    p = build_packing(PackingSpec.unit(4))
    y = np.array([1, 1, -1, -1, 1, -1, 1, -1, 3.914])
    F = (math.sqrt(2) + 1) ** 2
    assert p.constraints[0](y) == pytest.approx(F - float(y @ y) / 4)
    assert p.metadata["rho"] == 0.5 and p.metadata["eta"] == 0.0


def test_recover_original_solution():
    p = build_packing(PackingSpec.unit(2))
    y = np.array([1.0, -1.0, 0.0, 0.0, math.sqrt(6)])
    x = recover_original_solution(p, y)
    assert np.array_equal(x, [1.0, -1.0, 0.0, 0.0])
    assert np.array_equal(recover_original_solution(p, np.array([0.3, 0.0])), [0.3])
