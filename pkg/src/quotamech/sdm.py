"""Serial dictatorship with dynamic menus.

Students are processed in a fixed order. Before a student picks, an auxiliary
program reports, for each school on her list, how much more of her type the
school can still take without losing allocative efficiency. A student whose
favourite available school offers less than a full seat is partially assigned
and later completed by shifting quota slack from a critical school.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .core import (ZERO, Instance, TypeAssignment, adjusted_quotas, check_feasible,
                   compute_opt)
from .errors import ContractError, InvariantViolation, StructuralError
from .ratlp import LpProblem, Optimal, feasible, solve

ONE = Fraction(1)


@dataclass(frozen=True)
class Partial:
    student: str
    school: str
    remainder: Fraction


@dataclass
class SdmState:
    y: dict
    delta: dict
    partials: list
    assigned_counts: dict
    opt: Fraction
    processed: list = field(default_factory=list)

    @classmethod
    def initial(cls, inst: Instance, opt: Fraction | None = None) -> "SdmState":
        if opt is None:
            opt = compute_opt(inst)
        return cls({}, {}, [], {t: 0 for t in inst.types}, opt, [])

    def copy(self) -> "SdmState":
        return SdmState(dict(self.y), dict(self.delta), list(self.partials),
                        dict(self.assigned_counts), self.opt, list(self.processed))

    def partial_for(self, sid: str) -> Optional[Partial]:
        return next((p for p in self.partials if p.student == sid), None)

    def key(self) -> tuple:
        return (frozenset(self.y.items()), frozenset(self.delta.items()))


@dataclass(frozen=True)
class Assigned:
    school: str


@dataclass(frozen=True)
class PartiallyAssigned:
    school: str
    fraction: Fraction


@dataclass(frozen=True)
class SdmEvent:
    """One mutation of the run: a full or partial assignment, or a (j, s)-update.

    ``amount`` is 1 for a full assignment, the assigned fraction for a partial
    one and the transferred mass for an update. ``source`` is the school the
    partially assigned student is being completed at (updates only). Every
    event carries snapshots of the state right after it.
    """

    kind: str
    student: str
    school: str
    amount: Fraction
    source: Optional[str]
    probes: tuple
    y: Mapping
    delta: Mapping
    partials: tuple
    quotas: tuple


@dataclass(frozen=True)
class SdmResult:
    allocation: dict
    y: TypeAssignment
    delta: dict
    opt: Fraction
    order: tuple
    trace: tuple

    def adjusted_quotas(self, inst: Instance) -> tuple[dict, dict]:
        return adjusted_quotas(inst, self.delta)

    def regular_count(self, inst: Instance) -> int:
        return sum(1 for s in self.allocation.values() if s != inst.outside)

    def partial_events(self) -> list:
        return [e for e in self.trace if e.kind == "partial"]


def _add(d: dict, key, amount: Fraction) -> None:
    v = d.get(key, ZERO) + amount
    if v:
        d[key] = v
    else:
        d.pop(key, None)


def _remaining(state: SdmState, inst: Instance) -> dict:
    placed = {t: ZERO for t in inst.types}
    for (t, _), v in state.y.items():
        placed[t] += v
    return {t: inst.types[t] - placed[t] for t in inst.types}


def menu_program(state: SdmState, inst: Instance, target: tuple | None = None) -> LpProblem:
    """The menu program at ``state``; maximizes ``x[target]`` when given.

    Types with no remaining mass have all their variables fixed at zero and are
    left out. Lower-bound rows whose right-hand side is nonpositive are implied
    by nonnegativity and are left out as well.
    """
    remaining = _remaining(state, inst)
    active = [t for t in inst.types if remaining[t] > 0]
    active_set = set(active)
    p = LpProblem()
    for t in active:
        for s in inst.all_schools:
            p.add_variable((t, s))
    y, delta = state.y, state.delta
    placed_regular = sum((v for (_, s), v in y.items() if s != inst.outside), ZERO)
    need = state.opt - placed_regular
    if need > 0:
        p.add_constraint({(t, s): 1 for t in active for s in inst.schools}, ">=", need)
    for c in inst.constraints:
        s = c.school
        used = sum((y.get((t, s), ZERO) for t in c.types), ZERO)
        shift = sum((delta.get((t, s), ZERO) for t in c.types), ZERO)
        row = {(t, s): 1 for t in c.types if t in active_set}
        p.add_constraint(row, "<=", c.upper + shift - used)
        lo = c.lower + shift - used
        if lo > 0:
            p.add_constraint(row, ">=", lo)
    for t in active:
        p.add_constraint({(t, s): 1 for s in inst.all_schools}, "=", remaining[t])
    if target is not None and target[0] in active_set:
        p.set_objective({target: 1})
    return p


def f_value(state: SdmState, inst: Instance, t: str, s: str, cache: dict | None = None) -> Fraction:
    """Largest further mass of type ``t`` that school ``s`` can receive.

    ``cache`` is keyed by cell and state only, so it must not be shared
    between instances.
    """
    if t not in inst.types or s not in inst.all_schools:
        raise StructuralError(f"unknown cell {(t, s)!r}")
    key = None
    if cache is not None:
        key = (t, s) + state.key()
        hit = cache.get(key)
        if hit is not None:
            return hit
    out = solve(menu_program(state, inst, (t, s)))
    if not isinstance(out, Optimal):
        raise InvariantViolation(f"menu program became {type(out).__name__.lower()}")
    value = out.point.get((t, s), ZERO)
    if cache is not None:
        cache[key] = value
    return value


def menu_feasible(state: SdmState, inst: Instance) -> bool:
    return feasible(menu_program(state, inst))


def available_menu(state: SdmState, inst: Instance, t: str, cache: dict | None = None) -> list:
    """Schools that can still take a positive amount of type ``t``, outside option last."""
    return [s for s in inst.all_schools if f_value(state, inst, t, s, cache) > 0]


def _quota_snapshot(state: SdmState, inst: Instance) -> tuple:
    lower, upper = adjusted_quotas(inst, state.delta)
    return tuple((c.school, c.types, lower[c.key], upper[c.key]) for c in inst.constraints)


def _event(kind, state, inst, student, school, amount, source=None, probes=()) -> SdmEvent:
    return SdmEvent(kind, student, school, Fraction(amount), source, tuple(probes),
                    dict(state.y), dict(state.delta), tuple(state.partials),
                    _quota_snapshot(state, inst))


def assignment_step(state: SdmState, inst: Instance, sid: str, cache: dict | None = None,
                    events: list | None = None):
    """Offer student ``sid`` her best school with a positive menu value."""
    st = inst.student(sid)
    if sid in state.processed:
        raise ContractError(f"student {sid!r} was already processed")
    state = state.copy()
    probes = []
    for s in inst.effective_prefs(sid):
        f = f_value(state, inst, st.type, s, cache)
        probes.append((s, f))
        if f >= 1:
            _add(state.y, (st.type, s), ONE)
            outcome = Assigned(s)
        elif f > 0:
            _add(state.y, (st.type, s), f)
            state.partials.append(Partial(sid, s, ONE - f))
            outcome = PartiallyAssigned(s, f)
        else:
            continue
        state.processed.append(sid)
        state.assigned_counts[st.type] += 1
        if events is not None:
            kind = "assigned" if isinstance(outcome, Assigned) else "partial"
            amount = ONE if kind == "assigned" else f
            events.append(_event(kind, state, inst, sid, s, amount, probes=probes))
        return state, outcome
    raise InvariantViolation(f"no school, not even the outside option, admits student {sid!r}")


def apply_js_updates(state: SdmState, inst: Instance, sid: str, school: str,
                     f: Fraction | None = None, cache: dict | None = None) -> SdmState:
    """Move slack from critical ``school`` to the partial student's own school."""
    part = state.partial_for(sid)
    if part is None:
        raise ContractError(f"student {sid!r} is not partially assigned")
    if school == part.school:
        raise ContractError("a partial student cannot be resolved through her own school")
    t = inst.student(sid).type
    if f is None:
        f = f_value(state, inst, t, school, cache)
    if not 0 < f < 1:
        raise ContractError(f"school {school!r} is not critical for type {t!r} (f = {f})")
    rho = min(f, part.remainder)
    state = state.copy()
    _add(state.delta, (t, school), -rho)
    _add(state.delta, (t, part.school), rho)
    _add(state.y, (t, part.school), rho)
    idx = state.partials.index(part)
    left = part.remainder - rho
    if left:
        state.partials[idx] = Partial(sid, part.school, left)
    else:
        del state.partials[idx]
    return state


def _find_critical(state: SdmState, inst: Instance, cache) -> Optional[tuple]:
    for part in state.partials:
        t = inst.student(part.student).type
        for s in inst.all_schools:
            if s == part.school:
                continue
            f = f_value(state, inst, t, s, cache)
            if 0 < f < 1:
                return part, s, f
    return None


def resolution_step(state: SdmState, inst: Instance, cache: dict | None = None,
                    events: list | None = None, on_update=None) -> SdmState:
    """Apply (j, s)-updates until no partial student has a critical school.

    Partial students are scanned in processing order and candidate schools in
    instance order with the outside option last; the scan restarts after each
    update.
    """
    while True:
        found = _find_critical(state, inst, cache)
        if found is None:
            return state
        part, s, f = found
        before = state
        state = apply_js_updates(state, inst, part.student, s, f, cache)
        rho = before.partial_for(part.student).remainder - (
            state.partial_for(part.student).remainder if state.partial_for(part.student) else ZERO)
        if events is not None:
            events.append(_event("update", state, inst, part.student, s, rho, source=part.school))
        if on_update is not None:
            on_update(before, state, part, s, rho)


def random_order(inst: Instance, seed: int) -> list:
    ids = [st.id for st in inst.students]
    random.Random(seed).shuffle(ids)
    return ids


class _Checker:
    """Per-mutation invariant assertions used by ``run_sdm(check=True)``."""

    def __init__(self, inst: Instance, cache):
        self.inst = inst
        self.cache = cache
        self.prev_floor = {}
        self.seen_f = {}

    def observe_f(self, t, s, value):
        old = self.seen_f.get((t, s))
        if old is not None and value > old:
            raise InvariantViolation(f"menu value f{(t, s)} increased from {old} to {value}")
        self.seen_f[t, s] = value

    def __call__(self, state: SdmState) -> None:
        inst = self.inst
        for k, v in state.y.items():
            if v < 0:
                raise InvariantViolation(f"negative assignment mass at {k}")
        for k, v in state.delta.items():
            if not -1 <= v <= 1:
                raise InvariantViolation(f"adjustment {v} at {k} outside [-1, 1]")
        for t in inst.types:
            total = sum((state.delta.get((t, s), ZERO) for s in inst.all_schools), ZERO)
            if total:
                raise InvariantViolation(f"adjustments of type {t!r} do not cancel")
        partial_types = [inst.student(p.student).type for p in state.partials]
        if len(partial_types) != len(set(partial_types)):
            raise InvariantViolation("two partially assigned students share a type")
        for t in inst.types:
            for s in inst.all_schools:
                floor = state.y.get((t, s), ZERO) - state.delta.get((t, s), ZERO)
                if floor < self.prev_floor.get((t, s), ZERO):
                    raise InvariantViolation(f"y - delta decreased at {(t, s)}")
                self.prev_floor[t, s] = floor
        if not menu_feasible(state, inst):
            raise InvariantViolation("menu program infeasible after a step")


class _RecordingCache(dict):
    """Memo that reports every freshly computed menu value to the checker."""

    def __init__(self, checker: _Checker, seed: dict):
        super().__init__(seed)
        self.checker = checker

    def __setitem__(self, key, value):
        self.checker.observe_f(key[0], key[1], value)
        super().__setitem__(key, value)


def run_sdm(inst: Instance, order=None, *, seed: int | None = None, check: bool = False,
            cache: dict | None = None, opt: Fraction | None = None) -> SdmResult:
    """Run the mechanism over ``order`` (or a seeded random order)."""
    if order is None:
        order = random_order(inst, 0 if seed is None else seed)
    order = tuple(order)
    if sorted(order) != sorted(st.id for st in inst.students):
        raise StructuralError("order must be a permutation of the student ids")
    state = SdmState.initial(inst, opt)
    events: list = []
    checker = _Checker(inst, cache) if check else None
    if check:
        cache = _RecordingCache(checker, cache or {})
        checker(state)
    for sid in order:
        state, _ = assignment_step(state, inst, sid, cache, events)
        if checker:
            checker(state)
        state = resolution_step(state, inst, cache, events,
                                on_update=(lambda b, a, *_: checker(a)) if checker else None)
    if state.partials:
        raise InvariantViolation("a student is still partially assigned at termination")
    allocation = {}
    for e in events:
        if e.kind in ("assigned", "partial"):
            allocation[e.student] = e.school
    y = TypeAssignment(state.y)
    if checker:
        lower, upper = adjusted_quotas(inst, state.delta)
        if not check_feasible(y, inst, lower, upper).feasible:
            raise InvariantViolation("final assignment violates the adjusted quotas")
    return SdmResult({st.id: allocation[st.id] for st in inst.students}, y, dict(state.delta),
                     state.opt, order, tuple(events))
