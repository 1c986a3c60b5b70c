import numpy as np
import pytest

from cutspheres.cuts import QuadraticCut
from cutspheres.errors import BudgetExceeded, InfeasiblePolyhedron, UnboundedPolyhedron
from cutspheres.geometry import Polyhedron
from cutspheres.oracle import OracleBudget, brute_force_minimize, brute_force_sqcqp, enumerate_vertices, exact_projection_qp


def test_sqcqp_single_cut():
    res = brute_force_sqcqp([QuadraticCut(1.0, [0, 0], 1.0)], np.zeros(2))
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert res.certificate == "sampled"


def test_sqcqp_no_cuts():
    z = np.array([0.3, -0.2])
    res = brute_force_sqcqp([], z)
    assert np.array_equal(res.x, z) and res.value == 0.0


def test_sqcqp_second_cut_inactive():
    # ||x||^2 >= 1 and ||x - (3,0)||^2 >= 1, the latter as -||x||^2 + 6 x1 - 8 <= 0
    cuts = [QuadraticCut(1.0, [0, 0], 1.0), QuadraticCut(1.0, [6, 0], -8.0)]
    res = brute_force_sqcqp(cuts, np.zeros(2))
    assert res.value == pytest.approx(1.0, abs=1e-8)


def test_sqcqp_dimension_cap():
    with pytest.raises(BudgetExceeded):
        brute_force_sqcqp([QuadraticCut(1.0, np.zeros(5), 1.0)], np.zeros(5))


def test_sqcqp_agrees_with_analytic_two_balls():
    # union of balls around (+-0.5, 0) of radius 1 excluded; nearest point to 0
    # outside both lies at (0, sqrt(0.75))
    cuts = [QuadraticCut(1.0, [1.0, 0], 0.75), QuadraticCut(1.0, [-1.0, 0], 0.75)]
    res = brute_force_sqcqp(cuts, np.zeros(2))
    assert res.value == pytest.approx(0.75, abs=1e-7)


def test_brute_force_minimize_ring():
    res = brute_force_minimize([lambda x: 1 - float(x @ x)], np.zeros(2), 2.0)
    assert res.value == pytest.approx(1.0, abs=1e-7)


def test_exact_projection_examples():
    assert np.allclose(exact_projection_qp(Polyhedron([[1, 0]], [1]), np.array([2.0, 0.0])), [1, 0])
    P = Polyhedron([[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 0, 0])
    assert np.allclose(exact_projection_qp(P, np.array([2.0, 2.0])), [1, 1])


def test_exact_projection_infeasible():
    with pytest.raises(InfeasiblePolyhedron):
        exact_projection_qp(Polyhedron([[1, 0], [-1, 0]], [-1, -1]), np.zeros(2))


def test_exact_projection_caps():
    with pytest.raises(BudgetExceeded):
        exact_projection_qp(Polyhedron(np.ones((13, 2)), np.ones(13)), np.zeros(2))


def test_vertices_box_and_simplex():
    V = enumerate_vertices(Polyhedron.box([-1, -1], [1, 1]))
    assert sorted(map(tuple, np.round(V, 12))) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    V = enumerate_vertices(Polyhedron([[-1, 0], [0, -1], [1, 1]], [0, 0, 1]))
    assert sorted(map(tuple, np.round(V, 12) + 0.0)) == [(0, 0), (0, 1), (1, 0)]


def test_vertices_halfspace_unbounded():
    with pytest.raises(UnboundedPolyhedron) as err:
        enumerate_vertices(Polyhedron([[1.0, 0.0]], [1.0]))
    d = err.value.ray
    assert np.linalg.norm(d) > 0 and d[0] <= 1e-12


def test_vertices_unbounded_with_vertex():
    # a cone with apex at the origin
    with pytest.raises(UnboundedPolyhedron):
        enumerate_vertices(Polyhedron([[-1, 0], [0, -1]], [0, 0]))
