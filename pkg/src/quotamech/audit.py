"""Independent property oracles for mechanism outputs.

Every check returns an AuditReport. A violated report carries a witness that
can be re-verified by direct arithmetic or by rerunning the mechanism.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .core import (ZERO, Instance, StudentAssignment, TypeAssignment, adjusted_quotas,
                   check_feasible, compute_opt, student_program, regular_mass, type_profile)
from .errors import ContractError, InvariantViolation, SearchTooLarge
from .gps import run_gps
from .ratlp import Optimal, solve
from .sdm import random_order, run_sdm

PARETO_CAP = 500_000
PERMUTATION_CAP = 4


@dataclass(frozen=True)
class AuditReport:
    property: str
    holds: bool
    witness: Optional[dict] = None
    checked: int = 0
    notes: tuple = field(default=())

    def __post_init__(self):
        if not self.holds and self.witness is None:
            raise InvariantViolation("a violated report needs a witness")

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "violated"


def _prefixes(row: Mapping, pref: Sequence) -> list:
    out, acc = [], ZERO
    for s in pref[:-1]:
        acc += row.get(s, ZERO)
        out.append(acc)
    return out


def sd_dominates(a: Mapping, b: Mapping, pref: Sequence) -> bool:
    """``a`` stochastically dominates ``b`` (weakly) under the strict order ``pref``."""
    return all(pa >= pb for pa, pb in zip(_prefixes(a, pref), _prefixes(b, pref)))


def _row(x: StudentAssignment, sid: str, schools) -> dict:
    return {s: x[sid, s] for s in schools}


def check_envy_free(x: StudentAssignment, inst: Instance) -> AuditReport:
    cols = inst.all_schools
    checked = 0
    for a in inst.students:
        pref = inst.effective_prefs(a.id)
        mine = _prefixes(_row(x, a.id, cols), pref)
        for b in inst.students:
            if b.id == a.id or b.type != a.type:
                continue
            checked += 1
            theirs = _prefixes(_row(x, b.id, cols), pref)
            for k, (m, o) in enumerate(zip(mine, theirs)):
                if m < o:
                    return AuditReport("envy-free", False, {
                        "student": a.id, "envied": b.id, "school": pref[k + 1],
                        "own_mass_above": m, "other_mass_above": o,
                    }, checked)
    return AuditReport("envy-free", True, checked=checked)


def _is_student_feasible(x: StudentAssignment, inst: Instance) -> bool:
    p = student_program(inst)
    point = {(st.id, s): x[st.id, s] for st in inst.students for s in inst.all_schools}
    return p.is_feasible_point(point)


def check_ordinal_efficiency(x: StudentAssignment, inst: Instance) -> AuditReport:
    """Search, by one program, for a feasible assignment sd-dominating ``x`` for everyone.

    The program maximizes the total prefix-sum surplus of the candidate over
    ``x``; a positive optimum is a dominating assignment different from ``x``.
    """
    if not _is_student_feasible(x, inst):
        raise ContractError("ordinal efficiency is only defined for feasible assignments")
    p = student_program(inst)
    objective: dict = {}
    baseline = ZERO
    for st in inst.students:
        pref = inst.effective_prefs(st.id)
        for k in range(1, len(pref)):
            head = pref[:k]
            row = {(st.id, s): 1 for s in head}
            floor = sum((x[st.id, s] for s in head), ZERO)
            p.add_constraint(row, ">=", floor)
            baseline += floor
            for cell in row:
                objective[cell] = objective.get(cell, 0) + 1
    p.set_objective(objective)
    out = solve(p)
    if not isinstance(out, Optimal):
        raise InvariantViolation("dominance program lost its feasible point")
    surplus = out.value - baseline
    if surplus == 0:
        return AuditReport("ordinal-efficiency", True, checked=len(inst.students))
    z = StudentAssignment({k: v for k, v in out.point.items() if v})
    return AuditReport("ordinal-efficiency", False, {"dominating": z, "surplus": surplus},
                       len(inst.students))


def _rank(inst: Instance, sid: str) -> dict:
    return {s: k for k, s in enumerate(inst.effective_prefs(sid))}


def check_pareto(alloc: Mapping[str, str], inst: Instance, lower: Mapping | None = None,
                 upper: Mapping | None = None, cap: int = PARETO_CAP) -> AuditReport:
    """Exhaustively look for a quota-feasible allocation Pareto-dominating ``alloc``.

    Only allocations giving every student a weakly preferred school are
    enumerated; any dominating allocation is among them.
    """
    options = []
    for st in inst.students:
        prefs = inst.effective_prefs(st.id)
        mine = prefs.index(alloc[st.id])
        options.append(prefs[:mine + 1])
    size = math.prod(len(o) for o in options)
    if size > cap:
        raise SearchTooLarge(f"{size} candidate allocations exceed the cap of {cap}")
    if lower is None or upper is None:
        base_lo, base_hi = adjusted_quotas(inst, {})
        lower = base_lo if lower is None else lower
        upper = base_hi if upper is None else upper
    ids = [st.id for st in inst.students]
    types = [st.type for st in inst.students]
    checked = 0
    for choice in itertools.product(*options):
        if all(c == alloc[i] for i, c in zip(ids, choice)):
            continue
        checked += 1
        y: dict = {}
        for t, s in zip(types, choice):
            y[t, s] = y.get((t, s), 0) + 1
        if check_feasible(TypeAssignment(y), inst, lower, upper).feasible:
            better = dict(zip(ids, choice))
            return AuditReport("pareto", False, {"dominating": better}, checked)
    return AuditReport("pareto", True, checked=checked)


def _misreports(inst: Instance, sid: str, cap: int):
    if len(inst.schools) > cap:
        raise SearchTooLarge(f"{len(inst.schools)} regular schools exceed the permutation cap of {cap}")
    truth = inst.student(sid).prefs
    for perm in itertools.permutations(inst.schools):
        if perm != truth:
            yield perm


def check_strategyproof(inst: Instance, order: Sequence[str], cap: int = PERMUTATION_CAP,
                        opt: Fraction | None = None) -> AuditReport:
    """Rerun the dictatorship under every single-student misreport with ``order`` fixed."""
    opt = compute_opt(inst) if opt is None else opt
    cache: dict = {}
    truthful = run_sdm(inst, order, cache=cache, opt=opt).allocation
    checked = 0
    for st in inst.students:
        rank = _rank(inst, st.id)
        for perm in _misreports(inst, st.id, cap):
            checked += 1
            got = run_sdm(inst.with_prefs(st.id, perm), order, cache=cache, opt=opt).allocation[st.id]
            if rank[got] < rank[truthful[st.id]]:
                return AuditReport("strategyproof", False, {
                    "student": st.id, "report": list(perm),
                    "truthful": truthful[st.id], "misreport": got,
                }, checked)
    return AuditReport("strategyproof", True, checked=checked)


def _mechanism(kind: str, order: Sequence[str] | None, opt: Fraction) -> Callable:
    if kind == "gps":
        return lambda inst: run_gps(inst, opt).x
    if kind == "sd":
        if order is None:
            raise ContractError("the dictatorship needs an order")
        cache: dict = {}
        return lambda inst: StudentAssignment(
            {(i, s): 1 for i, s in run_sdm(inst, order, cache=cache, opt=opt).allocation.items()})
    raise ContractError(f"unknown mechanism {kind!r}")


def check_weak_sp(inst: Instance, mechanism: str = "gps", order: Sequence[str] | None = None,
                  cap: int = PERMUTATION_CAP, opt: Fraction | None = None) -> AuditReport:
    """No single-student misreport yields a different row that sd-dominates the truthful one.

    Students are examined in instance order and the first witness is reported.
    """
    opt = compute_opt(inst) if opt is None else opt
    run = _mechanism(mechanism, order, opt)
    cols = inst.all_schools
    truthful = run(inst)
    checked = 0
    for st in inst.students:
        pref = inst.effective_prefs(st.id)
        own = _row(truthful, st.id, cols)
        for perm in _misreports(inst, st.id, cap):
            checked += 1
            other = _row(run(inst.with_prefs(st.id, perm)), st.id, cols)
            if other != own and sd_dominates(other, own, pref):
                return AuditReport("weak-strategyproof", False, {
                    "student": st.id, "report": list(perm), "truthful_row": own, "misreport_row": other,
                }, checked)
    return AuditReport("weak-strategyproof", True, checked=checked)


def tolerance(n_seeds: int) -> float:
    return 4 * math.sqrt(math.log(n_seeds) / n_seeds)


def check_rsd_symmetry(inst: Instance, n_seeds: int, first_seed: int = 0) -> AuditReport:
    """Same-type students with identical preferences get matching empirical lotteries.

    The dictatorship runs over ``n_seeds`` shuffled orders; the largest gap in
    assignment frequency must stay within ``tolerance(n_seeds)``.
    """
    if n_seeds < 2:
        raise ContractError("symmetry needs at least two seeds")
    twins = [(a.id, b.id) for a, b in itertools.combinations(inst.students, 2)
             if a.type == b.type and a.prefs == b.prefs]
    if not twins:
        return AuditReport("rsd-symmetry", True, notes=("no identical pairs",))
    opt = compute_opt(inst)
    cache: dict = {}
    runs: dict = {}
    counts: dict = {}
    for seed in range(first_seed, first_seed + n_seeds):
        order = tuple(random_order(inst, seed))
        alloc = runs.get(order)
        if alloc is None:
            alloc = runs[order] = run_sdm(inst, order, cache=cache, opt=opt).allocation
        for i, s in alloc.items():
            counts[i, s] = counts.get((i, s), 0) + 1
    tol = tolerance(n_seeds)
    worst = (0.0, None, None)
    for a, b in twins:
        for s in inst.all_schools:
            gap = abs(counts.get((a, s), 0) - counts.get((b, s), 0)) / n_seeds
            if gap > worst[0]:
                worst = (gap, (a, b), s)
    gap, pair, school = worst
    notes = (f"max gap {gap:.4f}", f"tolerance {tol:.4f}", f"{len(runs)} distinct orders")
    if gap <= tol:
        return AuditReport("rsd-symmetry", True, checked=len(twins), notes=notes)
    return AuditReport("rsd-symmetry", False, {
        "pair": list(pair), "school": school, "gap": gap, "tolerance": tol,
    }, len(twins), notes)


def check_sd_feasibility(result, inst: Instance) -> AuditReport:
    """Final type mass within the adjusted quotas, and at least the optimum seated."""
    lower, upper = adjusted_quotas(inst, result.delta)
    report = check_feasible(result.y, inst, lower, upper)
    count = result.regular_count(inst)
    if not report.feasible:
        return AuditReport("feasibility", False, {"violations": list(report.violations)})
    if count < result.opt:
        return AuditReport("feasibility", False, {"regular_count": count, "opt": result.opt})
    return AuditReport("feasibility", True, checked=len(inst.constraints))


def check_gps_feasibility(x: StudentAssignment, inst: Instance, opt: Fraction) -> AuditReport:
    """Exact quota feasibility, unit rows, and exactly the optimum at regular schools."""
    for st in inst.students:
        if x.row_sum(st.id) != 1:
            return AuditReport("feasibility", False, {"student": st.id, "row_sum": x.row_sum(st.id)})
    report = check_feasible(type_profile(x, inst), inst)
    if not report.feasible:
        return AuditReport("feasibility", False, {"violations": list(report.violations)})
    mass = regular_mass(x, inst)
    if mass != opt:
        return AuditReport("feasibility", False, {"regular_mass": mass, "opt": opt})
    return AuditReport("feasibility", True, checked=len(inst.constraints))
