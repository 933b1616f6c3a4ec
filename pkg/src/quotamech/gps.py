"""Generalized probabilistic serial: simultaneous eating under quota constraints.

The consumed shares are kept *extendable*: some allocatively efficient
fractional assignment must dominate them on every regular school. Time advances
by exact event durations; whenever a (type, school) pair can no longer grow in
any extension it is blocked for good and its eaters move down their lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .core import ZERO, Instance, StudentAssignment, compute_opt
from .errors import InvariantViolation
from .ratlp import LpProblem, Optimal, feasible, solve

ONE = Fraction(1)
_C = ("c",)


@dataclass(frozen=True)
class SwitchEvent:
    time: Fraction
    switches: tuple  # (student, from_school, to_school)


@dataclass
class EatingState:
    x: dict
    clock: Fraction
    current: dict
    position: dict
    blocked: set

    @classmethod
    def initial(cls, inst: Instance) -> "EatingState":
        current = {st.id: inst.effective_prefs(st.id)[0] for st in inst.students}
        return cls({}, ZERO, current, {st.id: 0 for st in inst.students}, set())

    def pattern(self) -> dict:
        return dict(self.current)


@dataclass(frozen=True)
class GpsResult:
    x: StudentAssignment
    trace: tuple
    opt: Fraction


def _extension_problem(inst: Instance, opt: Fraction, x: Mapping, pattern: Mapping | None = None,
                       clock: Fraction = ZERO) -> LpProblem:
    """Witnesses ``x + c*theta + w`` of extendability, in the slack variables ``w``.

    With ``pattern`` given, a variable ``c`` (the eating duration) is added and
    capped by ``1 - clock``; otherwise the program is a pure feasibility test.
    Outside-option shares are not protected, so each student's outside mass is
    a free nonnegative variable.
    """
    out = inst.outside
    p = LpProblem()
    eats = {}
    if pattern is not None:
        p.add_variable(_C)
        p.add_constraint({_C: 1}, "<=", ONE - clock)
        eats = {i: s for i, s in pattern.items() if s != out}
    for st in inst.students:
        for s in inst.schools:
            p.add_variable((st.id, s))
        p.add_variable((st.id, out))
    held = {}
    for (i, s), v in x.items():
        if s != out and v:
            held[i, s] = v
    total_held = sum(held.values(), ZERO)
    for c in inst.constraints:
        members = [st.id for st in inst.students if st.type in c.types]
        row = {(i, c.school): 1 for i in members}
        eaters = sum(1 for i in members if eats.get(i) == c.school)
        if eaters:
            row[_C] = eaters
        mass = sum((held.get((i, c.school), ZERO) for i in members), ZERO)
        p.add_constraint(row, "<=", c.upper - mass)
        if c.lower - mass > 0:
            p.add_constraint(row, ">=", c.lower - mass)
    for st in inst.students:
        row = {(st.id, s): 1 for s in inst.all_schools}
        if st.id in eats:
            row[_C] = 1
        mine = sum((held.get((st.id, s), ZERO) for s in inst.schools), ZERO)
        p.add_constraint(row, "=", ONE - mine)
    ae = {(st.id, s): 1 for st in inst.students for s in inst.schools}
    if eats:
        ae[_C] = len(eats)
    p.add_constraint(ae, "=", opt - total_held)
    return p


def is_extendable(inst: Instance, opt: Fraction, y: Mapping) -> bool:
    """Some allocatively efficient feasible assignment dominates ``y`` on regular schools."""
    if isinstance(y, StudentAssignment):
        y = y.entries
    return feasible(_extension_problem(inst, opt, y))


def max_eat_duration(inst: Instance, opt: Fraction, state: EatingState) -> Fraction:
    """Longest time the current eating pattern keeps the shares extendable."""
    p = _extension_problem(inst, opt, state.x, state.current, state.clock)
    p.set_objective({_C: 1})
    outcome = solve(p)
    if not isinstance(outcome, Optimal):
        raise InvariantViolation("consumed shares are no longer extendable")
    return outcome.value


def blocked_now(inst: Instance, opt: Fraction, state: EatingState, t: str, s: str) -> bool:
    """No extension gives type ``t`` more of school ``s`` than it has consumed."""
    if s == inst.outside:
        return False
    p = _extension_problem(inst, opt, state.x)
    p.set_objective({(st.id, s): 1 for st in inst.students if st.type == t})
    outcome = solve(p)
    if not isinstance(outcome, Optimal):
        raise InvariantViolation("consumed shares are no longer extendable")
    return outcome.value == 0


def _settle(inst: Instance, opt: Fraction, state: EatingState) -> list:
    """Block exhausted (type, current school) pairs and move their eaters on."""
    switches = []
    while True:
        pairs = []
        for st in inst.students:
            s = state.current[st.id]
            pair = (st.type, s)
            if s != inst.outside and pair not in state.blocked and pair not in pairs:
                pairs.append(pair)
        newly = [pair for pair in pairs if blocked_now(inst, opt, state, *pair)]
        if not newly:
            return switches
        state.blocked.update(newly)
        for st in inst.students:
            prefs = inst.effective_prefs(st.id)
            k = state.position[st.id]
            start = prefs[k]
            while prefs[k] != inst.outside and (st.type, prefs[k]) in state.blocked:
                k += 1
            if k != state.position[st.id]:
                state.position[st.id] = k
                state.current[st.id] = prefs[k]
                switches.append((st.id, start, prefs[k]))


def run_gps(inst: Instance, opt: Fraction | None = None, *, check: bool = False) -> GpsResult:
    if opt is None:
        opt = compute_opt(inst)
    state = EatingState.initial(inst)
    trace = []
    while True:
        switches = _settle(inst, opt, state)
        if switches:
            trace.append(SwitchEvent(state.clock, _collapse(switches)))
        c = max_eat_duration(inst, opt, state)
        if c <= 0:
            raise InvariantViolation(f"eating pattern stalled at time {state.clock}")
        for i, s in state.current.items():
            state.x[i, s] = state.x.get((i, s), ZERO) + c
        state.clock += c
        if check:
            _check_state(inst, opt, state)
        if state.clock == 1:
            break
    return GpsResult(StudentAssignment(state.x), tuple(trace), opt)


def _collapse(switches: list) -> tuple:
    # a student moved twice within one event is reported once, first origin to final school
    first, last = {}, {}
    for sid, a, b in switches:
        first.setdefault(sid, a)
        last[sid] = b
    return tuple((sid, first[sid], last[sid]) for sid in first)


def _check_state(inst: Instance, opt: Fraction, state: EatingState) -> None:
    for st in inst.students:
        total = sum((state.x.get((st.id, s), ZERO) for s in inst.all_schools), ZERO)
        if total != state.clock:
            raise InvariantViolation(f"student {st.id!r} consumed {total} at time {state.clock}")
    if not is_extendable(inst, opt, state.x):
        raise InvariantViolation(f"shares not extendable at time {state.clock}")
