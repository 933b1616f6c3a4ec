"""Implementing a fractional assignment as a lottery over integral allocations.

Each integral allocation in the lottery is approximately feasible: it misses
any quota by at most the number of types, and it seats at least the floor of
the fractional optimum at regular schools.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping

from .core import ZERO, Instance, StudentAssignment, Violation, allocation_matrix
from .errors import ApproxFeasibilityViolated, ContractError, InvariantViolation
from .flows import integral_point_in_polytope

ONE = Fraction(1)


@dataclass(frozen=True)
class RoundingPolytope:
    """Integral-bounded box around a fractional assignment.

    Each type's mass at each regular school, and the total outside-option
    mass, is confined between the floor and the ceiling of its value in the
    source assignment. Every student row sums to one.
    """

    students: tuple  # (student id, type) in instance order
    schools: tuple
    outside: str
    type_bounds: Mapping  # (type, school) -> (lower, upper)
    outside_bounds: tuple

    def _aggregates(self, x: StudentAssignment) -> tuple[dict, Fraction]:
        of_type = dict(self.students)
        agg = {key: ZERO for key in self.type_bounds}
        phi = ZERO
        for (i, s), v in x.entries.items():
            if s == self.outside:
                phi += v
            else:
                agg[of_type[i], s] += v
        return agg, phi

    def contains(self, x: StudentAssignment) -> bool:
        known = {i for i, _ in self.students}
        cols = set(self.schools) | {self.outside}
        if any(i not in known or s not in cols or v < 0 for (i, s), v in x.entries.items()):
            return False
        if any(x.row_sum(i) != 1 for i in known):
            return False
        agg, phi = self._aggregates(x)
        if not self.outside_bounds[0] <= phi <= self.outside_bounds[1]:
            return False
        return all(lo <= agg[key] <= hi for key, (lo, hi) in self.type_bounds.items())

    def contains_allocation(self, alloc: Mapping[str, str]) -> bool:
        return self.contains(allocation_matrix(alloc))

    def restricted(self, type_bounds: Mapping, outside_bounds: tuple) -> "RoundingPolytope":
        return replace(self, type_bounds=dict(type_bounds), outside_bounds=tuple(outside_bounds))


def build_polytope(x: StudentAssignment, inst: Instance) -> RoundingPolytope:
    for st in inst.students:
        if x.row_sum(st.id) != 1:
            raise ContractError(f"row of student {st.id!r} sums to {x.row_sum(st.id)}, not 1")
    agg = {(t, s): ZERO for t in inst.types for s in inst.schools}
    phi = ZERO
    for (i, s), v in x.entries.items():
        if s == inst.outside:
            phi += v
        else:
            agg[inst.student(i).type, s] += v
    p = RoundingPolytope(
        tuple((st.id, st.type) for st in inst.students),
        inst.schools,
        inst.outside,
        {key: (math.floor(v), math.ceil(v)) for key, v in agg.items()},
        (math.floor(phi), math.ceil(phi)),
    )
    if not p.contains(x):
        raise InvariantViolation("source assignment is not in its own rounding polytope")
    return p


@dataclass(frozen=True)
class ApproxFeasibilityCert:
    violations: tuple  # Violation records, one per missed quota
    regular_count: int
    floor_opt: int
    n_types: int

    @property
    def max_violation(self) -> Fraction:
        return max((v.magnitude for v in self.violations), default=ZERO)

    @property
    def ok(self) -> bool:
        return self.max_violation <= self.n_types and self.regular_count >= self.floor_opt


def certify_approx_feasible(alloc: Mapping[str, str], inst: Instance, opt: Fraction) -> ApproxFeasibilityCert:
    """Measure every quota miss and the regular-school count of an integral allocation.

    Raises ApproxFeasibilityViolated, carrying the certificate, when a quota is
    missed by more than the number of types or too few students are seated.
    """
    schools = set(inst.all_schools)
    for st in inst.students:
        if alloc.get(st.id) not in schools:
            raise ContractError(f"student {st.id!r} is not assigned a school")
    if set(alloc) != {st.id for st in inst.students}:
        raise ContractError("allocation names unknown students")
    counts: dict = {}
    for st in inst.students:
        key = (st.type, alloc[st.id])
        counts[key] = counts.get(key, 0) + 1
    violations = []
    for c in inst.constraints:
        mass = sum(counts.get((t, c.school), 0) for t in c.types)
        if mass < c.lower:
            violations.append(Violation(c.school, c.types, "lower", c.lower - mass))
        elif mass > c.upper:
            violations.append(Violation(c.school, c.types, "upper", mass - c.upper))
    regular = sum(1 for s in alloc.values() if s != inst.outside)
    cert = ApproxFeasibilityCert(tuple(violations), regular, math.floor(opt), len(inst.types))
    if not cert.ok:
        raise ApproxFeasibilityViolated("allocation is not approximately feasible", cert)
    return cert


@dataclass(frozen=True)
class Lottery:
    entries: tuple  # (weight, {student: school}) pairs

    def __post_init__(self):
        if any(w <= 0 for w, _ in self.entries):
            raise InvariantViolation("lottery weights must be positive")
        if sum((w for w, _ in self.entries), ZERO) != 1:
            raise InvariantViolation("lottery weights must sum to one")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def expectation(self) -> StudentAssignment:
        out: dict = {}
        for w, alloc in self.entries:
            for i, s in alloc.items():
                out[i, s] = out.get((i, s), ZERO) + w
        return StudentAssignment(out)

    def sample(self, rng: random.Random) -> dict:
        """Draw one allocation with exactly its lottery probability."""
        denom = math.lcm(*(w.denominator for w, _ in self.entries))
        ticket = rng.randrange(denom)
        for w, alloc in self.entries:
            ticket -= w.numerator * (denom // w.denominator)
            if ticket < 0:
                return dict(alloc)
        raise InvariantViolation("lottery sampling ran past the last allocation")


def _face(p: RoundingPolytope, z: dict) -> tuple:
    # bounds of the smallest face holding z: integral aggregates are tight, so pin them
    of_type = dict(p.students)
    agg = {key: ZERO for key in p.type_bounds}
    phi = ZERO
    for (i, s), v in z.items():
        if s == p.outside:
            phi += v
        else:
            agg[of_type[i], s] += v
    bounds = {key: ((int(v), int(v)) if v.denominator == 1 else p.type_bounds[key])
              for key, v in agg.items()}
    out_bounds = (int(phi), int(phi)) if phi.denominator == 1 else p.outside_bounds
    return bounds, out_bounds, agg, phi


def _step(p: RoundingPolytope, z: dict, v: dict, agg: dict, phi: Fraction) -> Fraction:
    """Largest weight on ``v`` that keeps the rescaled residual inside ``p``."""
    of_type = dict(p.students)
    v_agg = {key: 0 for key in p.type_bounds}
    v_phi = 0
    for i, s in v.items():
        if s == p.outside:
            v_phi += 1
        else:
            v_agg[of_type[i], s] += 1
    lam = min(z[i, s] for i, s in v.items())
    pairs = [(agg[key], v_agg[key], p.type_bounds[key]) for key in p.type_bounds]
    pairs.append((phi, v_phi, p.outside_bounds))
    for zv, vv, (lo, hi) in pairs:
        if vv < hi:
            lam = min(lam, (hi - zv) / (hi - vv))
        if vv > lo:
            lam = min(lam, (zv - lo) / (vv - lo))
    return lam


def decompose(x: StudentAssignment, inst: Instance, opt: Fraction) -> Lottery:
    """Write ``x`` as a convex combination of approximately feasible integral allocations.

    Repeatedly peels off an integral vertex of the face of the rounding
    polytope that holds the current residual, with the largest weight keeping
    the rescaled residual in the polytope, until the residual is integral.
    """
    p = build_polytope(x, inst)
    z = dict(x.entries)
    remaining = ONE
    weights: dict = {}
    order = []
    rounds = 0
    limit = sum(1 for v in z.values() if v.denominator != 1) + 1
    while True:
        rounds += 1
        if rounds > limit:
            raise InvariantViolation("decomposition exceeded its round bound")
        if all(v.denominator == 1 for v in z.values()):
            v = {i: s for (i, s), q in z.items() if q}
            lam = ONE
        else:
            bounds, out_bounds, agg, phi = _face(p, z)
            v = integral_point_in_polytope(p.restricted(bounds, out_bounds), set(z))
            lam = _step(p, z, v, agg, phi)
            if not 0 < lam < 1:
                raise InvariantViolation(f"peeling step {lam} out of range")
        key = tuple(sorted(v.items()))
        if key not in weights:
            order.append(key)
            weights[key] = ZERO
        weights[key] += remaining * lam
        if lam == 1:
            break
        for i, s in v.items():
            z[i, s] -= lam
        z = {cell: q / (1 - lam) for cell, q in z.items() if q}
        remaining *= 1 - lam
    student_order = [st.id for st in inst.students]
    entries = []
    for key in order:
        alloc = dict(key)
        try:
            certify_approx_feasible(alloc, inst, opt)
        except ApproxFeasibilityViolated as exc:
            raise InvariantViolation(f"lottery allocation fails certification: {exc.certificate}") from exc
        if not p.contains_allocation(alloc):
            raise InvariantViolation("lottery allocation outside the rounding polytope")
        entries.append((weights[key], {i: alloc[i] for i in student_order}))
    lottery = Lottery(tuple(entries))
    if lottery.expectation() != x:
        raise InvariantViolation("lottery expectation differs from the source assignment")
    return lottery
