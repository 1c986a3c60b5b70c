import math

import numpy as np
import pytest

from cutspheres.cuts import (
    OuterApproximation,
    QuadraticCut,
    append_cuts,
    ball_of_cut,
    build_cut,
    floor_cut,
    is_redundant_at_level,
    linearize_at_level,
    restart_set,
)
from cutspheres.errors import DegenerateHalfspace, PreconditionViolated
from cutspheres.model import Problem, WeaklyConvexConstraint, violated_set
from cutspheres.problems import PackingSpec, build_packing

from helpers import ring


def test_cut_of_ring_at_origin_is_unit_sphere():
    cut = build_cut(ring(), np.zeros(2))
    assert cut.a == 1.0 and cut.c == 1.0
    assert np.array_equal(cut.b, [0.0, 0.0])


def test_convex_constraint_gives_linear_cut():
    f = WeaklyConvexConstraint.from_smooth(lambda x: float(x @ x) - 1, lambda x: 2 * x, 0.0)
    xl = np.array([2.0, 1.0])
    cut = build_cut(f, xl)
    y = np.array([-0.3, 0.8])
    # f(x_l) + grad f(x_l).(y - x_l)
    assert cut(y) == pytest.approx(f(xl) + float(2 * xl @ (y - xl)))


def test_hand_expanded_cut():
    f = WeaklyConvexConstraint.from_smooth(lambda x: float(x @ x) - 4, lambda x: 2 * x, 1.0)
    cut = build_cut(f, np.array([3.0, 0.0]))
    assert cut.a == 1.0
    assert np.array_equal(cut.b, [12.0, 0.0])
    assert cut.c == -22.0
    assert cut(np.array([3.0, 0.0])) == 5.0


def test_ball_of_cut_examples():
    c, r = ball_of_cut(QuadraticCut(1.0, [0, 0], 1.0), np.zeros(2), 1.0)
    assert np.array_equal(c, [0, 0]) and r == 1.0
    c, r = ball_of_cut(QuadraticCut(1.0, [2, 0], 3.0), np.zeros(2), 3.0)
    assert np.array_equal(c, [1, 0]) and r == 2.0
    with pytest.raises(DegenerateHalfspace):
        ball_of_cut(QuadraticCut(0.0, [1, 0], 0.0), np.zeros(2), 1.0)
    with pytest.raises(PreconditionViolated):
        ball_of_cut(QuadraticCut(1.0, [0, 0], 1.0), np.zeros(2), 0.0)


def test_ball_matches_violated_region():
    rng = np.random.default_rng(0)
    f = ring(1.5, np.array([0.4, -0.2]))
    xl = np.array([0.1, 0.3])
    cut = build_cut(f, xl)
    center, r = ball_of_cut(cut, xl, f(xl))
    for y in rng.uniform(-3, 3, size=(200, 2)):
        inside = np.linalg.norm(y - center) < r
        assert inside == (cut(y) > 0) or abs(np.linalg.norm(y - center) - r) < 1e-9


def test_append_cuts_counts():
    p = Problem(np.zeros(2), [ring(), ring(0.5, np.array([3.0, 0.0]))])
    x = np.array([3.0, 0.0])
    rep = violated_set(p, x)
    oa = append_cuts(OuterApproximation(), p, rep, x)
    assert len(oa) == 1
    three = OuterApproximation(tuple(floor_cut(1.0, 2) for _ in range(3)), 2.0)
    x0 = np.array([0.1, 0.0])
    rep0 = violated_set(p, x0)
    assert len(rep0) == 1
    oa2 = append_cuts(append_cuts(three, p, rep0, x0), p, rep, x)
    assert len(oa2) == 5 and oa2.norm_floor == 2.0


def test_append_cuts_packing_start():
    p = build_packing(PackingSpec.unit(4))
    x0 = np.random.default_rng(1).standard_normal(9) * 0.1
    rep = violated_set(p, x0)
    oa = append_cuts(OuterApproximation(), p, rep, x0)
    assert len(oa) == len(rep) == int(np.sum(p.values(x0) > 0))


def test_append_cuts_requires_violation():
    p = Problem(np.zeros(2), [ring()])
    x = np.array([2.0, 0.0])
    with pytest.raises(PreconditionViolated):
        append_cuts(OuterApproximation(), p, violated_set(p, x), x)


def test_restart_sets():
    p = Problem(np.zeros(2), [ring(), ring(1.0, np.array([0.5, 0.0]))])
    x = np.array([0.2, 0.0])
    rep = violated_set(p, x)
    oa = restart_set(p, x, rep, 24.0, "inexact")
    assert len(oa) == 0 and oa.norm_floor == 24.0
    oa = restart_set(p, x, rep, float(x @ x), "warm")
    assert len(oa) == 2 and oa.norm_floor == pytest.approx(0.04)
    oa = restart_set(p, x, rep, 0.0, "warm")
    assert oa.norm_floor == 0.0 and len(oa.as_quadratic_cuts(2)) == 2


def test_linearize_examples():
    unit = QuadraticCut(1.0, [0, 0], 1.0)
    lp = linearize_at_level(OuterApproximation((unit,)), 1.0)
    assert lp.polyhedron.n_rows == 0
    cut = QuadraticCut(1.0, [2, 0], 3.0)
    lp = linearize_at_level(OuterApproximation((cut,)), 4.0)
    (g, h), = lp.rows
    assert np.array_equal(g, [2, 0]) and h == 1.0
    lin = QuadraticCut(0.0, [1, 0], 10.0)
    for alpha in (1.0, 7.0):
        (g, h), = linearize_at_level(OuterApproximation((lin,)), alpha).rows
        assert h == -10.0


def test_redundancy_examples():
    assert is_redundant_at_level(QuadraticCut(1.0, [0, 0], 1.0), 1.0)
    assert not is_redundant_at_level(QuadraticCut(1.0, [2, 0], 3.0), 4.0)
    assert not is_redundant_at_level(QuadraticCut(0.0, [1, 0], 10.0), 1.0)


def test_floor_never_linearized():
    oa = OuterApproximation((QuadraticCut(1.0, [2, 0], 3.0),), norm_floor=4.0)
    lp = linearize_at_level(oa, 4.0)
    assert lp.polyhedron.n_rows == 1


def test_cut_record_round_trip():
    cut = QuadraticCut(0.5, [1.0, -2.0], 3.25, constraint=2, iterate=7)
    rec = cut.to_record()
    assert rec == {"iter": 7, "constraint": 2, "a": 0.5, "b": [1.0, -2.0], "c": 3.25}
    assert QuadraticCut.from_record(rec) == cut


def test_level_consistency_on_sphere():
    rng = np.random.default_rng(5)
    cuts = tuple(QuadraticCut(rng.random(), rng.standard_normal(3), rng.standard_normal()) for _ in range(6))
    oa = OuterApproximation(cuts)
    alpha = 2.0
    lp = linearize_at_level(oa, alpha, 3)
    for _ in range(300):
        u = rng.standard_normal(3)
        x = u / np.linalg.norm(u) * math.sqrt(alpha)
        in_poly = bool(np.all(lp.polyhedron.residuals(x) <= 1e-10))
        in_oa = all(c(x) <= 1e-10 for c in cuts)
        assert in_poly == in_oa
