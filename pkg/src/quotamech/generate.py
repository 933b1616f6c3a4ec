"""Deterministic random instances for the property suites.

Quotas are drawn around a hidden reference assignment, so the fractional
program is feasible by construction. Half-integral references make the
quota bounds fractional-tight, which is what forces partial assignments.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from .core import Instance, QuotaConstraint, Student, compute_opt
from .errors import ContractError, InfeasibleInstance

STYLES = ("pairs", "laminar", "random-subsets")
HALF = Fraction(1, 2)


def _reference(rng: random.Random, students: list, schools: list, outside: str, half: bool) -> dict:
    mass: dict = {}
    options = schools + [outside]
    # a shared split between two places makes odd cycles of tight pair quotas likely
    common = rng.sample(options, 2)
    for _, t in students:
        if half:
            picks = common if rng.random() < 0.6 else [rng.choice(options), rng.choice(options)]
        else:
            picks = [rng.choice(options)] * 2
        for s in picks:
            mass[t, s] = mass.get((t, s), 0) + HALF
    return mass


def _bounds(rng: random.Random, m: Fraction, tightness: float) -> tuple:
    lo, hi = math.floor(m), math.ceil(m)
    if rng.random() >= tightness:
        lo -= rng.randint(0, 1)
        hi += rng.randint(1, 2)
    return max(lo, 0), hi


def _laminar_family(rng: random.Random, types: list) -> list:
    shuffled = types[:]
    rng.shuffle(shuffled)
    fam = []
    k = 0
    while k < len(shuffled):
        size = rng.randint(1, len(shuffled) - k)
        block = shuffled[k:k + size]
        k += size
        cuts = sorted(rng.sample(range(1, size + 1), rng.randint(1, size)))
        fam.extend(frozenset(block[:c]) for c in cuts)
    if rng.random() < 0.5:
        fam.append(frozenset(types))
    return list(dict.fromkeys(fam))


def _family(rng: random.Random, style: str, types: list) -> list:
    if style == "laminar":
        return _laminar_family(rng, types)
    if style == "pairs":
        pairs = [frozenset(p) for p in _combinations2(types)]
        fam = [p for p in pairs if rng.random() < 0.5]
        if not pairs:
            fam = [frozenset(types)]
        return fam
    n = rng.randint(1, 3)
    fam = []
    for _ in range(n):
        fam.append(frozenset(rng.sample(types, rng.randint(1, len(types)))))
    return list(dict.fromkeys(fam))


def _combinations2(items: list) -> list:
    return [(a, b) for k, a in enumerate(items) for b in items[k + 1:]]


def gen_instance(seed: int, n_students: int = 5, n_schools: int = 3, n_types: int = 3,
                 style: str = "pairs", tightness: float = 0.5, max_tries: int = 20) -> Instance:
    """A random instance, identical for identical arguments.

    ``tightness`` is the chance that a quota pins the reference mass exactly.
    Laminar instances use an integral reference, so all their quotas are integral.
    """
    if style not in STYLES:
        raise ContractError(f"unknown constraint style {style!r}; expected one of {STYLES}")
    if min(n_students, n_schools, n_types) < 1 or n_types > n_students:
        raise ContractError("need at least one student per type, school and type")
    if not 0 <= tightness <= 1:
        raise ContractError("tightness must lie in [0, 1]")
    rng = random.Random(seed)
    for _ in range(max_tries):
        inst = _draw(rng, n_students, n_schools, n_types, style, tightness)
        try:
            compute_opt(inst)
        except InfeasibleInstance:
            continue
        return inst
    raise InfeasibleInstance(f"no feasible instance after {max_tries} draws")


def _draw(rng, n_students, n_schools, n_types, style, tightness) -> Instance:
    types = [f"t{k + 1}" for k in range(n_types)]
    schools = [f"s{k + 1}" for k in range(n_schools)]
    member = types + [rng.choice(types) for _ in range(n_students - n_types)]
    rng.shuffle(member)
    students = [(f"i{k + 1}", t) for k, t in enumerate(member)]
    mass = _reference(rng, students, schools, "phi", half=style != "laminar")
    constraints = []
    for s in schools:
        for r in _family(rng, style, types):
            m = sum((mass.get((t, s), 0) for t in r), Fraction(0))
            lo, hi = _bounds(rng, m, tightness)
            constraints.append(QuotaConstraint(s, r, Fraction(lo), Fraction(hi)))
    counts = {t: member.count(t) for t in types}
    roster = []
    for sid, t in students:
        prefs = schools[:]
        rng.shuffle(prefs)
        roster.append(Student(sid, t, tuple(prefs)))
    return Instance(tuple(schools), counts, tuple(constraints), tuple(roster))
