"""Domain model: instances, assignments, feasibility and the fractional optimum."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InfeasibleInstance, StructuralError
from .ratlp import LpProblem, Optimal, solve
from .rational import as_rational

ZERO = Fraction(0)


@dataclass(frozen=True)
class QuotaConstraint:
    school: str
    types: frozenset
    lower: Fraction
    upper: Fraction

    @property
    def key(self) -> tuple:
        return (self.school, self.types)


@dataclass(frozen=True)
class Student:
    id: str
    type: str
    prefs: tuple


@dataclass(frozen=True)
class Instance:
    """A school choice problem with distributional constraints.

    ``types`` maps type id to its student count, in declaration order.
    ``constraints`` holds every (school, type-subset) quota pair; the outside
    option never carries one. Every student ranks all regular schools.
    """

    schools: tuple
    types: Mapping[str, int]
    constraints: tuple
    students: tuple
    outside: str = "phi"
    _by_school: dict = field(init=False, repr=False, compare=False, hash=False)
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "schools", tuple(self.schools))
        object.__setattr__(self, "types", dict(self.types))
        object.__setattr__(self, "students", tuple(self.students))
        cons = []
        for c in self.constraints:
            cons.append(QuotaConstraint(c.school, frozenset(c.types),
                                        as_rational(c.lower), as_rational(c.upper)))
        object.__setattr__(self, "constraints", tuple(cons))
        self._validate()
        by_school = {s: [] for s in self.schools}
        for c in self.constraints:
            by_school[c.school].append(c)
        object.__setattr__(self, "_by_school", {s: tuple(v) for s, v in by_school.items()})
        object.__setattr__(self, "_by_id", {st.id: st for st in self.students})

    def _validate(self):
        if len(set(self.schools)) != len(self.schools):
            raise StructuralError("duplicate school ids")
        if self.outside in self.schools:
            raise StructuralError(f"outside option {self.outside!r} listed as a regular school")
        for t, c in self.types.items():
            if not isinstance(c, int) or isinstance(c, bool) or c <= 0:
                raise StructuralError(f"type {t!r} count must be a positive integer, got {c!r}")
        seen = set()
        for c in self.constraints:
            if c.school == self.outside:
                raise StructuralError("the outside option carries no constraints")
            if c.school not in self.schools:
                raise StructuralError(f"constraint on unknown school {c.school!r}")
            if not c.types:
                raise StructuralError(f"constraint at {c.school!r} has an empty type set")
            unknown = [t for t in c.types if t not in self.types]
            if unknown:
                raise StructuralError(f"constraint at {c.school!r} names unknown types {sorted(unknown)}")
            if c.lower > c.upper:
                raise StructuralError(
                    f"constraint at {c.school!r} on {sorted(c.types)}: lower {c.lower} > upper {c.upper}")
            if c.key in seen:
                raise StructuralError(f"duplicate constraint at {c.school!r} on {sorted(c.types)}")
            seen.add(c.key)
        ids = set()
        regular = set(self.schools)
        for st in self.students:
            if st.id in ids:
                raise StructuralError(f"duplicate student id {st.id!r}")
            ids.add(st.id)
            if st.type not in self.types:
                raise StructuralError(f"student {st.id!r} has unknown type {st.type!r}")
            missing = [s for s in self.schools if s not in st.prefs]
            if missing:
                raise StructuralError(f"student {st.id} prefs missing school {missing[0]}")
            if len(st.prefs) != len(self.schools) or set(st.prefs) != regular:
                raise StructuralError(f"student {st.id} prefs must be a permutation of the regular schools")
        counts = Counter(st.type for st in self.students)
        for t, c in self.types.items():
            if counts.get(t, 0) != c:
                raise StructuralError(f"type {t!r} declares {c} students but {counts.get(t, 0)} are listed")

    @property
    def all_schools(self) -> tuple:
        return self.schools + (self.outside,)

    @property
    def type_ids(self) -> tuple:
        return tuple(self.types)

    def constraints_at(self, school: str) -> tuple:
        if school == self.outside:
            return ()
        return self._by_school[school]

    def student(self, sid: str) -> Student:
        try:
            return self._by_id[sid]
        except KeyError:
            raise StructuralError(f"unknown student {sid!r}") from None

    def effective_prefs(self, sid: str) -> tuple:
        """Regular schools in preference order, then the outside option."""
        return self.student(sid).prefs + (self.outside,)

    def with_prefs(self, sid: str, prefs: Iterable[str]) -> "Instance":
        students = tuple(Student(st.id, st.type, tuple(prefs)) if st.id == sid else st
                         for st in self.students)
        return Instance(self.schools, self.types, self.constraints, students, self.outside)

    def is_laminar(self) -> bool:
        for s in self.schools:
            fam = [c.types for c in self.constraints_at(s)]
            for a in range(len(fam)):
                for b in range(a + 1, len(fam)):
                    r, q = fam[a], fam[b]
                    if r & q and not (r <= q or q <= r):
                        return False
        return True


class _Matrix:
    """Sparse exact matrix keyed by (row id, school id); missing cells are zero."""

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping | None = None):
        self.entries = {k: Fraction(v) for k, v in (entries or {}).items() if v}

    def __getitem__(self, key) -> Fraction:
        return self.entries.get(key, ZERO)

    def __eq__(self, other):
        return type(self) is type(other) and self.entries == other.entries

    def __hash__(self):
        return hash(frozenset(self.entries.items()))

    def __add__(self, other):
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, ZERO) + v
        return type(self)(out)

    def __rmul__(self, alpha):
        alpha = Fraction(alpha)
        return type(self)({k: alpha * v for k, v in self.entries.items()})

    def row(self, key, columns) -> tuple:
        return tuple(self[key, s] for s in columns)

    def row_sum(self, key) -> Fraction:
        return sum((v for (r, _), v in self.entries.items() if r == key), ZERO)

    def __repr__(self):
        cells = ", ".join(f"{k}: {v}" for k, v in sorted(self.entries.items()))
        return f"{type(self).__name__}({{{cells}}})"


class TypeAssignment(_Matrix):
    """Mass of each type at each school (outside option included)."""


class StudentAssignment(_Matrix):
    """Probability of each student being assigned to each school."""


@dataclass(frozen=True)
class Violation:
    school: str
    types: frozenset
    direction: str  # "lower" | "upper"
    magnitude: Fraction


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def max_magnitude(self) -> Fraction:
        return max((v.magnitude for v in self.violations), default=ZERO)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def type_profile(x: StudentAssignment, inst: Instance) -> TypeAssignment:
    schools = set(inst.all_schools)
    out: dict = {}
    for (sid, s), v in x.entries.items():
        st = inst.student(sid)
        if s not in schools:
            raise StructuralError(f"unknown school {s!r}")
        out[st.type, s] = out.get((st.type, s), ZERO) + v
    return TypeAssignment(out)


def allocation_matrix(alloc: Mapping[str, str]) -> StudentAssignment:
    return StudentAssignment({(i, s): 1 for i, s in alloc.items()})


def base_quotas(inst: Instance) -> tuple[dict, dict]:
    lower = {c.key: c.lower for c in inst.constraints}
    upper = {c.key: c.upper for c in inst.constraints}
    return lower, upper


def adjusted_quotas(inst: Instance, delta: Mapping) -> tuple[dict, dict]:
    """Quotas shifted by the aggregated adjustment ``delta[(t, s)]`` over each subset."""
    lower, upper = {}, {}
    for c in inst.constraints:
        shift = sum((delta.get((t, c.school), ZERO) for t in c.types), ZERO)
        lower[c.key] = c.lower + shift
        upper[c.key] = c.upper + shift
    return lower, upper


def check_feasible(y: TypeAssignment, inst: Instance, lower: Mapping | None = None,
                   upper: Mapping | None = None) -> ViolationReport:
    """Every (school, subset) whose aggregate mass leaves its quota interval."""
    if lower is None or upper is None:
        base_lo, base_hi = base_quotas(inst)
        lower = base_lo if lower is None else lower
        upper = base_hi if upper is None else upper
    keys = {c.key for c in inst.constraints}
    if set(lower) != keys or set(upper) != keys:
        raise StructuralError("quota tables must cover exactly the instance constraints")
    types, schools = set(inst.types), set(inst.all_schools)
    for (t, s) in y.entries:
        if t not in types or s not in schools:
            raise StructuralError(f"unknown cell {(t, s)!r}")
    out = []
    for c in inst.constraints:
        mass = sum((y[t, c.school] for t in c.types), ZERO)
        lo, hi = lower[c.key], upper[c.key]
        if mass < lo:
            out.append(Violation(c.school, c.types, "lower", lo - mass))
        if mass > hi:
            out.append(Violation(c.school, c.types, "upper", mass - hi))
    return ViolationReport(tuple(out))


def regular_mass(x: _Matrix, inst: Instance) -> Fraction:
    return sum((v for (_, s), v in x.entries.items() if s != inst.outside), ZERO)


def type_program(inst: Instance) -> LpProblem:
    """Maximize mass on regular schools over feasible type-assignments."""
    p = LpProblem()
    for t in inst.types:
        for s in inst.all_schools:
            p.add_variable((t, s))
    for c in inst.constraints:
        row = {(t, c.school): 1 for t in c.types}
        p.add_constraint(row, "<=", c.upper)
        if c.lower > 0:
            p.add_constraint(row, ">=", c.lower)
    for t, count in inst.types.items():
        p.add_constraint({(t, s): 1 for s in inst.all_schools}, "=", count)
    p.set_objective({(t, s): 1 for t in inst.types for s in inst.schools})
    return p


def student_program(inst: Instance) -> LpProblem:
    """The student-level form of the same program."""
    p = LpProblem()
    for st in inst.students:
        for s in inst.all_schools:
            p.add_variable((st.id, s))
    for c in inst.constraints:
        row = {(st.id, c.school): 1 for st in inst.students if st.type in c.types}
        p.add_constraint(row, "<=", c.upper)
        if c.lower > 0:
            p.add_constraint(row, ">=", c.lower)
    for st in inst.students:
        p.add_constraint({(st.id, s): 1 for s in inst.all_schools}, "=", 1)
    p.set_objective({(st.id, s): 1 for st in inst.students for s in inst.schools})
    return p


def compute_opt(inst: Instance) -> Fraction:
    out = solve(type_program(inst))
    if not isinstance(out, Optimal):
        raise InfeasibleInstance("no fractional assignment satisfies the distributional constraints")
    return out.value


def compute_opt_by_student(inst: Instance) -> Fraction:
    out = solve(student_program(inst))
    if not isinstance(out, Optimal):
        raise InfeasibleInstance("no fractional assignment satisfies the distributional constraints")
    return out.value
