"""Acceptance criteria, one marked group per criterion.

The session summary prints a PASS/FAIL line for each criterion number.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction as F

import pytest

from oracles import brute_force_lp, random_lp
from quotamech import (check_envy_free, check_feasible, check_ordinal_efficiency, check_pareto,
                       check_rsd_symmetry, check_strategyproof, check_weak_sp, compute_opt,
                       decompose, integral_opt_laminar, load_fixture, run_gps, run_sdm, sd_dominates)
from quotamech.core import adjusted_quotas, allocation_matrix, regular_mass, type_profile
from quotamech.ratlp import Infeasible, LpProblem, Optimal, solve
from quotamech.sdm import random_order

H = F(1, 2)
Q = F(1, 4)


def resolved_tables(result):
    """Quota snapshot after each completed resolution (the last of each run of updates)."""
    tables, prev = [], None
    for e in result.trace:
        if e.kind != "update" and prev is not None:
            tables.append(prev)
            prev = None
        if e.kind == "update":
            prev = e
    if prev is not None:
        tables.append(prev)
    return [{(s, r): (lo, hi) for s, r, lo, hi in e.quotas} for e in tables]


def table(s1_rows, s2_rows):
    out = {}
    for school, rows in (("s1", s1_rows), ("s2", s2_rows)):
        for types, lo, hi in rows:
            out[school, frozenset(types)] = (F(lo), F(hi))
    return out


# criterion 1

EX31_TABLES = [
    table([(("t1", "t2"), "3/2", "5/2"), (("t2", "t3"), 1, 2), (("t3", "t1"), "3/2", "5/2")],
          [(("t1", "t2"), "1/2", "3/2"), (("t2", "t3"), 1, 2), (("t3", "t1"), "1/2", "3/2")]),
    table([(("t1", "t2"), 2, 3), (("t2", "t3"), "3/2", "5/2"), (("t3", "t1"), "3/2", "5/2")],
          [(("t1", "t2"), 0, 1), (("t2", "t3"), "1/2", "3/2"), (("t3", "t1"), "1/2", "3/2")]),
    table([(("t1", "t2"), 2, 3), (("t2", "t3"), 1, 2), (("t3", "t1"), 1, 2)],
          [(("t1", "t2"), 0, 1), (("t2", "t3"), 1, 2), (("t3", "t1"), 1, 2)]),
]


@pytest.mark.acceptance(1)
def test_c1_simple_example_golden_trace():
    inst = load_fixture("pairwise")
    start = time.perf_counter()
    result = run_sdm(inst, ["i", "j", "k"], check=True)
    elapsed = time.perf_counter() - start
    assert resolved_tables(result) == EX31_TABLES
    assert result.allocation == {"i": "s1", "j": "s1", "k": "s2"}
    assert elapsed < 1.0


@pytest.mark.acceptance(1)
def test_c1_partial_steps_match_narrative():
    result = run_sdm(load_fixture("pairwise"), ["i", "j", "k"])
    partials = [(e.student, e.school, e.amount) for e in result.partial_events()]
    assert partials == [("i", "s1", H), ("j", "s1", H), ("k", "s2", H)]
    sources = [(e.student, e.source, e.school) for e in result.trace if e.kind == "update"]
    assert {(i, via) for i, _, via in sources} == {("i", "s2"), ("j", "s2"), ("k", "s1")}


# criterion 2

def _walkthrough_table(s1, s2):
    s1_sets = [("t1", "t2"), ("t2", "t3"), ("t3", "t1"), ("t1", "t2", "t3")]
    s2_sets = [("t3", "t4"), ("t4", "t5"), ("t5", "t3"), ("t1", "t2", "t3")]
    return table([(r, lo, hi) for r, (lo, hi) in zip(s1_sets, s1)],
                 [(r, lo, hi) for r, (lo, hi) in zip(s2_sets, s2)])


WALKTHROUGH_TABLES = [
    _walkthrough_table([("3/2", "3/2"), (1, 1), ("3/2", "3/2"), ("1/2", "5/2")],
                    [(1, 1), (1, 1), (1, 1), ("-1/2", "3/2")]),
    _walkthrough_table([("3/2", "3/2"), ("3/2", "3/2"), (2, 2), (1, 3)],
                    [("1/2", "1/2"), (1, 1), ("1/2", "1/2"), (-1, 1)]),
    _walkthrough_table([("3/2", "3/2"), ("3/2", "3/2"), (2, 2), (1, 3)],
                    [(1, 1), ("3/2", "3/2"), ("1/2", "1/2"), (-1, 1)]),
    _walkthrough_table([("3/2", "3/2"), ("3/2", "3/2"), (2, 2), (1, 3)],
                    [(1, 1), (1, 1), (0, 0), (-1, 1)]),
    _walkthrough_table([(2, 2), (2, 2), (2, 2), ("3/2", "7/2")],
                    [(1, 1), (1, 1), (0, 0), (-1, 1)]),
]

WALKTHROUGH_ORDER = [f"i{k}" for k in range(1, 8)]


@pytest.mark.acceptance(2)
def test_c2_walkthrough_golden_trace():
    inst = load_fixture("walkthrough")
    start = time.perf_counter()
    result = run_sdm(inst, WALKTHROUGH_ORDER, check=True)
    elapsed = time.perf_counter() - start
    assert resolved_tables(result) == WALKTHROUGH_TABLES
    assert result.regular_count(inst) == 6
    assert elapsed < 5.0


@pytest.mark.acceptance(2)
def test_c2_walkthrough_step_outcomes():
    inst = load_fixture("walkthrough")
    result = run_sdm(inst, WALKTHROUGH_ORDER)
    first = {}
    for e in result.trace:
        if e.kind in ("assigned", "partial"):
            first[e.student] = e
    assert first["i2"].kind == "assigned" and first["i2"].school == "s2"
    assert first["i6"].kind == "assigned" and first["i6"].school == "phi"
    assert dict(first["i6"].probes) == {"s1": 0, "s2": 0, "phi": 1}
    assert [(e.student, e.amount) for e in result.partial_events()] == [
        ("i1", H), ("i3", H), ("i4", H), ("i5", H), ("i7", H)]
    i7_updates = {(e.source, e.school) for e in result.trace if e.kind == "update" and e.student == "i7"}
    assert i7_updates == {("s1", "phi")}
    # i1 waits through its own resolution step; i2's full assignment makes s2 critical
    kinds = [(e.kind, e.student) for e in result.trace[:3]]
    assert kinds == [("partial", "i1"), ("assigned", "i2"), ("update", "i1")]


# shared fuzz runs for criteria 3 to 8

@pytest.fixture(scope="module")
def fuzz_runs(corpus):
    runs = []
    for k, inst in enumerate(corpus):
        order = random_order(inst, k)
        sd = run_sdm(inst, order, check=True)
        gps = run_gps(inst, sd.opt, check=True)
        runs.append((inst, order, sd, gps))
    return runs


@pytest.mark.acceptance(3)
def test_c3_corpus_shape(fuzz_runs):
    assert len(fuzz_runs) >= 200
    for inst, *_ in fuzz_runs:
        assert len(inst.students) <= 8 and len(inst.schools) <= 4 and len(inst.types) <= 5
    laminar = sum(1 for inst, *_ in fuzz_runs if inst.is_laminar())
    assert 0 < laminar < len(fuzz_runs)
    assert sum(len(sd.partial_events()) for _, _, sd, _ in fuzz_runs) > 0


@pytest.mark.acceptance(3)
def test_c3_sdm_guarantees(fuzz_runs):
    for inst, order, sd, _ in fuzz_runs:
        lower, upper = adjusted_quotas(inst, sd.delta)
        assert check_feasible(sd.y, inst, lower, upper).feasible, order
        assert sd.regular_count(inst) >= sd.opt
        assert sd.opt == compute_opt(inst)
        for e in sd.trace:
            assert all(abs(v) <= 1 for v in e.delta.values())
            types = [inst.student(p.student).type for p in e.partials]
            assert len(types) == len(set(types))
        for c in inst.constraints:
            shift = sum((sd.delta.get((t, c.school), 0) for t in c.types), F(0))
            assert abs(shift) <= len(inst.types)
        assert sd.trace[-1].partials == ()
        assert type_profile(allocation_matrix(sd.allocation), inst) == sd.y


@pytest.mark.acceptance(4)
def test_c4_strategyproof(fuzz_runs):
    audited = 0
    for inst, order, sd, _ in fuzz_runs:
        if len(inst.schools) <= 3:
            report = check_strategyproof(inst, order, opt=sd.opt)
            assert report.holds, report.witness
            audited += 1
    assert audited > 0


@pytest.mark.acceptance(5)
def test_c5_pareto(fuzz_runs):
    audited = 0
    for inst, _, sd, _ in fuzz_runs:
        if len(inst.students) <= 6:
            lower, upper = sd.adjusted_quotas(inst)
            report = check_pareto(sd.allocation, inst, lower, upper)
            assert report.holds, report.witness
            audited += 1
    assert audited > 0


@pytest.mark.acceptance(6)
def test_c6_gps_golden():
    inst = load_fixture("pairwise")
    result = run_gps(inst, check=True)
    for st in inst.students:
        assert [result.x[st.id, s] for s in inst.all_schools] == [H, H, 0]
    assert len(result.trace) == 1
    assert result.trace[0].time == H


@pytest.mark.acceptance(7)
def test_c7_gps_properties(fuzz_runs):
    for inst, _, _, gps in fuzz_runs:
        for st in inst.students:
            assert gps.x.row_sum(st.id) == 1
        assert regular_mass(gps.x, inst) == gps.opt
        assert check_feasible(type_profile(gps.x, inst), inst).feasible
        report = check_envy_free(gps.x, inst)
        assert report.holds, report.witness
        report = check_ordinal_efficiency(gps.x, inst)
        assert report.holds, report.witness


@pytest.mark.acceptance(8)
def test_c8_lottery(fuzz_runs):
    for inst, _, _, gps in fuzz_runs:
        lot = decompose(gps.x, inst, gps.opt)
        weights = [w for w, _ in lot]
        assert all(w > 0 for w in weights) and sum(weights) == 1
        assert len(lot) <= len(inst.students) * len(inst.all_schools) + 1
        expected = {}
        for w, alloc in lot:
            for i, s in alloc.items():
                expected[i, s] = expected.get((i, s), 0) + w
        assert {k: v for k, v in expected.items() if v} == gps.x.entries
        for _, alloc in lot:
            assert sum(1 for s in alloc.values() if s != inst.outside) >= math.floor(gps.opt)
            for c in inst.constraints:
                mass = sum(1 for st in inst.students
                           if st.type in c.types and alloc[st.id] == c.school)
                assert c.lower - len(inst.types) <= mass <= c.upper + len(inst.types)


# criterion 9

def _row(x, sid, inst):
    return tuple(x[sid, s] for s in inst.schools)


@pytest.mark.acceptance(9)
def test_c9_misreport_by_i():
    inst = load_fixture("impossibility")
    x = run_gps(inst.with_prefs("i", ("s2", "s1", "s3"))).x
    assert _row(x, "i", inst) == (H, Q, Q)
    assert _row(x, "j", inst) == (0, Q, 3 * Q)


@pytest.mark.acceptance(9)
def test_c9_misreport_by_j():
    inst = load_fixture("impossibility")
    x = run_gps(inst.with_prefs("j", ("s2", "s1", "s3"))).x
    assert _row(x, "j", inst) == (0, H, H)


@pytest.mark.acceptance(9)
def test_c9_weak_sp_violated():
    inst = load_fixture("impossibility")
    report = check_weak_sp(inst)
    assert not report.holds
    w = report.witness
    student = inst.student(w["student"])
    rerun = run_gps(inst.with_prefs(student.id, w["report"])).x
    assert {s: rerun[student.id, s] for s in inst.all_schools} == w["misreport_row"]
    pref = inst.effective_prefs(student.id)
    assert w["misreport_row"] != w["truthful_row"]
    assert sd_dominates(w["misreport_row"], w["truthful_row"], pref)


@pytest.mark.acceptance(9)
def test_c9_witness_is_j():
    inst = load_fixture("impossibility")
    report = check_weak_sp(inst)
    assert not report.holds
    assert report.witness["student"] == "j"
    assert report.witness["report"] == ["s2", "s1", "s3"]
    assert report.witness["misreport_row"] == {"s1": 0, "s2": H, "s3": H, "phi": 0}


# criterion 10

@pytest.mark.acceptance(10)
def test_c10_laminar(laminar_instances):
    assert len(laminar_instances) >= 50
    for inst in laminar_instances:
        assert inst.is_laminar()
        assert all(c.lower.denominator == 1 and c.upper.denominator == 1 for c in inst.constraints)
        opt = compute_opt(inst)
        alloc = integral_opt_laminar(inst)
        assert sum(1 for s in alloc.values() if s != inst.outside) == opt
        assert check_feasible(type_profile(allocation_matrix(alloc), inst), inst).feasible
        sd = run_sdm(inst, random_order(inst, 7), check=True)
        assert sd.partial_events() == []
        assert all(v == 0 for v in sd.delta.values())


# criterion 11

@pytest.mark.acceptance(11)
def test_c11_lp_oracle():
    statuses = set()
    for k in range(300):
        n, cons, objective = random_lp(random.Random(k))
        p = LpProblem()
        for j in range(n):
            p.add_variable(j)
        for coeffs, rel, rhs in cons:
            p.add_constraint({j: c for j, c in enumerate(coeffs) if c}, rel, rhs)
        p.set_objective({j: c for j, c in enumerate(objective) if c})
        out = solve(p)
        status, value = brute_force_lp(n, cons, objective)
        statuses.add(status)
        if status == "optimal":
            assert isinstance(out, Optimal) and out.value == value, k
        elif status == "infeasible":
            assert isinstance(out, Infeasible), k
        else:
            assert not isinstance(out, (Optimal, Infeasible)), k
    assert statuses == {"optimal", "infeasible", "unbounded"}


# criterion 12

@pytest.mark.acceptance(12)
def test_c12_rsd_symmetry():
    inst = load_fixture("twins")
    start = time.perf_counter()
    report = check_rsd_symmetry(inst, 10_000)
    elapsed = time.perf_counter() - start
    assert report.holds, report.witness
    assert report.checked == 1
    assert elapsed < 60
