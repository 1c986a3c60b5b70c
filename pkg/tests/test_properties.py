"""Property-based checks of the invariants every run must satisfy."""

import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutspheres.cuts import build_cut
from cutspheres.model import Problem
from cutspheres.problems import NpcSpec, PackingSpec, build_npc, build_packing, load_iris
from cutspheres.problems.packing import overlaps
from cutspheres.solver import SolverConfig, Status, solve_inexact, solve_warm
from helpers import ring
from test_solver import random_instance, reference

seeds = st.integers(0, 2**31 - 1)


@lru_cache(maxsize=None)
def npc_problem():
    return build_npc(NpcSpec.from_dataset(load_iris()))


@lru_cache(maxsize=None)
def packing_problem(m):
    return build_packing(PackingSpec.unit(m))


def builtin_problems():
    return [packing_problem(2), packing_problem(3), npc_problem(), random_instance(0)]


def feasible_packing_point(rng, m):
    """Centers on a spread-out grid with ``p`` large enough for the enclosing constraint."""
    while True:
        c = rng.uniform(-3 * m, 3 * m, (m, 2))
        v = np.concatenate([c[:, 0], c[:, 1], [0.0]])
        if not overlaps(v, PackingSpec.unit(m), tol=0.0):
            break
    R = float(np.max(np.linalg.norm(c, axis=1) + 1.0))
    v[-1] = math.sqrt(m * R**2 - float(np.sum(c * c))) + rng.uniform(0, 1)
    return v


# -- cuts ----------------------------------------------------------------------


@settings(max_examples=60)
@given(seeds, st.integers(0, 3))
def test_cut_is_minorant_and_excludes_point(seed, which):
    rng = np.random.default_rng(seed)
    prob = builtin_problems()[which]
    n = prob.dimension
    x = rng.uniform(-1, 1, n) * (0.3 if which == 2 else 2.0)
    for i, con in enumerate(prob.constraints):
        cut = build_cut(con, x, i)
        fx = con(x)
        assert cut(x) == pytest.approx(fx, abs=1e-9 * (1 + abs(fx)))
        for y in x + rng.standard_normal((20, n)):
            assert cut(y) <= con(y) + 1e-9 * (1 + abs(con(y)))
        if fx > 0:
            assert cut(x) > 0  # x_k is cut off by its own cut


@settings(max_examples=40)
@given(seeds, st.sampled_from([2, 3]))
def test_feasible_points_survive_every_cut(seed, m):
    rng = np.random.default_rng(seed)
    prob = packing_problem(m)
    n = prob.dimension
    feasible = [feasible_packing_point(rng, m) for _ in range(10)]
    assert all(np.max(prob.values(v)) <= 1e-9 for v in feasible)
    for _ in range(10):
        x = rng.uniform(-2, 2, n)
        for i, con in enumerate(prob.constraints):
            if con(x) > 0:
                cut = build_cut(con, x, i)
                assert all(cut(v) <= 1e-9 * (1 + float(v @ v)) for v in feasible)


# -- runs ----------------------------------------------------------------------


def check_trace(res, cap):
    J = [r.J for r in res.trace]
    assert all(b >= a - 1e-10 for a, b in zip(J, J[1:]))
    assert all(r.cuts <= cap for r in res.trace)
    assert res.message != "iteration limit"
    assert res.status is not Status.UNCERTIFIED


def check_inexact_jumps(res, eps):
    levels = [r.level for r in res.trace if r.restart]
    for a, b in zip(levels, levels[1:]):
        assert b - a == pytest.approx(eps, rel=1e-12)
    for r in res.trace:
        assert r.J == pytest.approx(r.level, rel=1e-9, abs=1e-12)


@settings(max_examples=15)
@given(seeds, st.sampled_from([0.25, 0.5, 1.0]), st.integers(0, 4))
def test_inexact_invariants_small(seed, eps, inst):
    prob = random_instance(inst) if inst else Problem(np.zeros(3), [ring(), ring(0.5, np.array([1.0, 0, 0]))])
    cfg = SolverConfig(eps=eps, max_cuts=200, feas_tol=1e-7, seed=seed)
    res = solve_inexact(prob, cfg)
    check_trace(res, cfg.max_cuts)
    check_inexact_jumps(res, eps)
    if inst:
        J_star = reference(prob)
        assert all(r.J <= J_star + eps + 1e-6 for r in res.trace)
        if res.status is Status.FEASIBLE_EPS_OPTIMAL:
            assert res.J <= J_star + eps + 1e-6


@settings(max_examples=3)
@given(seeds)
def test_inexact_invariants_packing(seed):
    cfg = SolverConfig(eps=1.0, start_level=2.0, max_cuts=200, feas_tol=1e-4, seed=seed)
    res = solve_inexact(packing_problem(2), cfg)
    check_trace(res, cfg.max_cuts)
    check_inexact_jumps(res, 1.0)
    assert all(r.level <= 8.0 + 1.0 for r in res.trace)


@settings(max_examples=3)
@given(seeds)
def test_inexact_invariants_npc(seed):
    cfg = SolverConfig(eps=0.5, max_cuts=500, seed=seed)
    res = solve_inexact(npc_problem(), cfg)
    check_trace(res, cfg.max_cuts)
    check_inexact_jumps(res, 0.5)


@settings(max_examples=15)
@given(st.integers(0, 4), st.integers(2, 6), st.sampled_from([1e-3, 1e-2, 0.1]))
def test_warm_invariants(inst, cap, delta):
    prob = random_instance(inst)
    cfg = SolverConfig(variant="warm", max_cuts=cap, delta=delta, max_iter=500, feas_tol=1e-7)
    res = solve_warm(prob, cfg)
    check_trace(res, cap)
    J_restarts = [0.0] + [r.J for r in res.trace if r.restart]
    for a, b in zip(J_restarts, J_restarts[1:]):
        assert b - a > delta
    assert res.J <= reference(prob) + 1e-6
