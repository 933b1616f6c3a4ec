from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_lp, random_lp
from quotamech.errors import ContractError
from quotamech.ratlp import (Infeasible, LinearConstraint, LpProblem, Optimal, Relation, Unbounded,
                             feasible, feasible_point, solve)


def _problem(n, cons, objective):
    p = LpProblem()
    for j in range(n):
        p.add_variable(j)
    for coeffs, rel, rhs in cons:
        p.add_constraint({j: c for j, c in enumerate(coeffs) if c}, rel, rhs)
    p.set_objective({j: c for j, c in enumerate(objective) if c})
    return p


def test_single_upper_bound():
    p = LpProblem()
    p.add_variable("x")
    p.add_constraint({"x": 1}, "<=", 3)
    p.set_objective({"x": 1})
    out = solve(p)
    assert out == Optimal(F(3), {"x": F(3)})


def test_contradictory_bounds():
    p = LpProblem()
    p.add_variable("x")
    p.add_constraint({"x": 1}, ">=", 1)
    p.add_constraint({"x": 1}, "<=", 0)
    assert isinstance(solve(p), Infeasible)
    assert not feasible(p)
    assert feasible_point(p) is None


def test_empty_constraint_set_is_feasible():
    p = LpProblem()
    p.add_variable("x")
    assert feasible(p)


def test_unbounded_ray():
    p = LpProblem()
    p.add_variable("x")
    p.add_variable("y")
    p.add_constraint({"x": 1, "y": -1}, "<=", 1)
    p.set_objective({"x": 1})
    assert isinstance(solve(p), Unbounded)


def test_free_variable_minimum():
    p = LpProblem()
    p.add_variable("z", free=True)
    p.add_constraint({"z": 1}, ">=", -5)
    p.set_objective({"z": 1}, "min")
    out = solve(p)
    assert isinstance(out, Optimal) and out.value == -5


def test_minimize_with_equalities():
    p = LpProblem()
    for v in "abc":
        p.add_variable(v)
    p.add_constraint({"a": 1, "b": 1, "c": 1}, "=", 1)
    p.add_constraint({"a": 1, "b": -1}, "=", F(1, 3))
    p.set_objective({"a": 2, "b": 1, "c": 3}, "min")
    out = solve(p)
    assert out.value == F(5, 3)
    assert out.point == {"a": F(2, 3), "b": F(1, 3), "c": 0}


def test_degenerate_cycling_example_terminates():
    # a classic instance on which the largest-coefficient rule cycles
    p = LpProblem()
    for v in range(4):
        p.add_variable(v)
    p.add_constraint({0: F(1, 4), 1: -60, 2: F(-1, 25), 3: 9}, "<=", 0)
    p.add_constraint({0: F(1, 2), 1: -90, 2: F(-1, 50), 3: 3}, "<=", 0)
    p.add_constraint({2: 1}, "<=", 1)
    p.set_objective({0: F(3, 4), 1: -150, 2: F(1, 50), 3: -6})
    out = solve(p)
    assert out.value == F(1, 20)


def test_redundant_equalities():
    p = LpProblem()
    p.add_variable("x")
    p.add_variable("y")
    p.add_constraint({"x": 1, "y": 1}, "=", 2)
    p.add_constraint({"x": 2, "y": 2}, "=", 4)
    p.set_objective({"x": 1, "y": 2})
    assert solve(p).value == 4


def test_constraint_helpers():
    c = LinearConstraint((("x", F(2)), ("y", F(-1))), Relation.LE, F(1))
    assert c.lhs({"x": 1, "y": 1}) == 1
    assert c.satisfied_by({"x": 1, "y": 1})
    assert not c.satisfied_by({"x": 2})


def test_rejects_float_coefficients():
    p = LpProblem()
    p.add_variable("x")
    with pytest.raises((ContractError, ValueError, TypeError)):
        p.add_constraint({"x": 0.5}, "<=", 1)


def test_solution_point_is_feasible_and_attains_value():
    for k in range(60):
        n, cons, objective = random_lp(random.Random(400 + k))
        p = _problem(n, cons, objective)
        out = solve(p)
        if isinstance(out, Optimal):
            assert p.is_feasible_point(out.point)
            assert p.objective_value(out.point) == out.value


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_matches_basic_solution_enumeration(seed):
    n, cons, objective = random_lp(random.Random(seed))
    out = solve(_problem(n, cons, objective))
    status, value = brute_force_lp(n, cons, objective)
    expected = {"optimal": Optimal, "infeasible": Infeasible, "unbounded": Unbounded}[status]
    assert isinstance(out, expected)
    if status == "optimal":
        assert out.value == value
