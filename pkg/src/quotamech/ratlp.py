"""Exact two-phase primal simplex over the rationals.

The tableau keeps every row as a list of Python integers together with a
positive row denominator, so a pivot only touches rows with a nonzero entry in
the pivot column and never allocates Fraction objects. Bland's rule is used in
both phases, which guarantees termination on degenerate problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Hashable, Mapping, Union

from .errors import InvariantViolation, StructuralError
from .rational import as_rational


class Relation(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: tuple[tuple[Hashable, Fraction], ...]
    relation: Relation
    rhs: Fraction

    def lhs(self, point: Mapping[Hashable, Fraction]) -> Fraction:
        return sum((c * point.get(v, 0) for v, c in self.coeffs), Fraction(0))

    def satisfied_by(self, point: Mapping[Hashable, Fraction]) -> bool:
        value = self.lhs(point)
        if self.relation is Relation.LE:
            return value <= self.rhs
        if self.relation is Relation.GE:
            return value >= self.rhs
        return value == self.rhs


@dataclass
class LpProblem:
    """A linear program over named variables.

    Variables are nonnegative unless declared ``free``. Coefficients may be
    ints, Fractions or ``"p/q"`` strings; they are stored as Fractions.
    """

    variables: list = field(default_factory=list)
    free: set = field(default_factory=set)
    constraints: list[LinearConstraint] = field(default_factory=list)
    sense: Sense = Sense.MAX
    objective: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {v: k for k, v in enumerate(self.variables)}
        if len(self._index) != len(self.variables):
            raise StructuralError("duplicate variable ids")

    def add_variable(self, var: Hashable, *, free: bool = False) -> Hashable:
        if var in self._index:
            raise StructuralError(f"variable {var!r} declared twice")
        self._index[var] = len(self.variables)
        self.variables.append(var)
        if free:
            self.free.add(var)
        return var

    def add_constraint(self, coeffs: Mapping, relation, rhs) -> None:
        relation = Relation(relation)
        terms = []
        for var, coef in coeffs.items():
            if var not in self._index:
                raise StructuralError(f"constraint references undeclared variable {var!r}")
            coef = as_rational(coef)
            if coef:
                terms.append((var, coef))
        self.constraints.append(LinearConstraint(tuple(terms), relation, as_rational(rhs)))

    def set_objective(self, coeffs: Mapping, sense="max") -> None:
        for var in coeffs:
            if var not in self._index:
                raise StructuralError(f"objective references undeclared variable {var!r}")
        self.sense = Sense(sense)
        self.objective = {v: as_rational(c) for v, c in coeffs.items() if c}

    def objective_value(self, point: Mapping) -> Fraction:
        return sum((c * point.get(v, 0) for v, c in self.objective.items()), Fraction(0))

    def is_feasible_point(self, point: Mapping) -> bool:
        for v in self.variables:
            if v not in self.free and point.get(v, 0) < 0:
                return False
        return all(con.satisfied_by(point) for con in self.constraints)


@dataclass(frozen=True)
class Optimal:
    value: Fraction
    point: dict


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class Unbounded:
    pass


LpOutcome = Union[Optimal, Infeasible, Unbounded]


class _Tableau:
    """Dense simplex tableau with per-row integer numerators."""

    def __init__(self, problem: LpProblem):
        self.problem = problem
        col_of = {}
        ncol = 0
        for v in problem.variables:
            if v in problem.free:
                col_of[v] = (ncol, ncol + 1)
                ncol += 2
            else:
                col_of[v] = (ncol,)
                ncol += 1
        self.col_of = col_of
        n_struct = ncol

        prepared = []
        seen = set()
        for con in problem.constraints:
            dense = {}
            for v, c in con.coeffs:
                cols = col_of[v]
                dense[cols[0]] = dense.get(cols[0], 0) + c
                if len(cols) == 2:
                    dense[cols[1]] = dense.get(cols[1], 0) - c
            rel, rhs = con.relation, con.rhs
            if rhs < 0:
                dense = {k: -c for k, c in dense.items()}
                rhs = -rhs
                rel = {Relation.LE: Relation.GE, Relation.GE: Relation.LE}.get(rel, rel)
            key = (tuple(sorted((k, c) for k, c in dense.items() if c)), rel, rhs)
            if key in seen:
                continue
            seen.add(key)
            prepared.append(key)

        n_slack = sum(1 for _, rel, _ in prepared if rel is not Relation.EQ)
        n_art = sum(1 for _, rel, _ in prepared if rel is not Relation.LE)
        self.first_art = n_struct + n_slack
        self.width = n_struct + n_slack + n_art
        w = self.width

        rows, dens, basis = [], [], []
        slack = n_struct
        art = self.first_art
        for terms, rel, rhs in prepared:
            den = rhs.denominator
            for _, c in terms:
                den = den * c.denominator // gcd(den, c.denominator)
            row = [0] * (w + 1)
            for k, c in terms:
                row[k] = c.numerator * (den // c.denominator)
            row[w] = rhs.numerator * (den // rhs.denominator)
            if rel is Relation.LE:
                row[slack] = den
                basis.append(slack)
                slack += 1
            else:
                if rel is Relation.GE:
                    row[slack] = -den
                    slack += 1
                row[art] = den
                basis.append(art)
                art += 1
            rows.append(row)
            dens.append(den)
        self.rows, self.dens, self.basis = rows, dens, basis

        # phase-2 reduced-cost row: d_j = c_B B^-1 A_j - c_j, starting from c_B = 0
        sign = 1 if problem.sense is Sense.MAX else -1
        obj = {}
        for v, c in problem.objective.items():
            cols = col_of[v]
            obj[cols[0]] = obj.get(cols[0], 0) + sign * c
            if len(cols) == 2:
                obj[cols[1]] = obj.get(cols[1], 0) - sign * c
        oden = 1
        for c in obj.values():
            oden = oden * c.denominator // gcd(oden, c.denominator)
        orow = [0] * (w + 1)
        for k, c in obj.items():
            orow[k] = -c.numerator * (oden // c.denominator)
        self.obj2 = [orow, oden]
        self.obj1 = None
        if n_art:
            self.obj1 = self._phase1_row()

    def _phase1_row(self):
        # maximize -sum(artificials); artificial columns cancel against their rows
        w = self.width
        art_rows = [i for i, b in enumerate(self.basis) if b >= self.first_art]
        den = 1
        for i in art_rows:
            d = self.dens[i]
            den = den * d // gcd(den, d)
        row = [0] * (w + 1)
        for i in art_rows:
            scale = den // self.dens[i]
            src = self.rows[i]
            for k in range(w + 1):
                if src[k]:
                    row[k] -= src[k] * scale
        for k in range(self.first_art, w):
            row[k] += den
        return [row, den]

    def _pivot(self, r: int, c: int) -> None:
        prow = self.rows[r]
        p = prow[c]
        if p < 0:
            prow = [-v for v in prow]
            p = -p
        g = gcd(p, *prow)
        if g > 1:
            prow = [v // g for v in prow]
            p //= g
        self.rows[r] = prow
        self.dens[r] = p
        self.basis[r] = c
        for i in range(len(self.rows)):
            if i == r:
                continue
            row = self.rows[i]
            a = row[c]
            if not a:
                continue
            new = [p * u - a * v for u, v in zip(row, prow)]
            nd = self.dens[i] * p
            g = gcd(nd, *new)
            if g > 1:
                new = [v // g for v in new]
                nd //= g
            self.rows[i] = new
            self.dens[i] = nd
        for obj in (self.obj1, self.obj2):
            if obj is None:
                continue
            row, d = obj
            a = row[c]
            if not a:
                continue
            new = [p * u - a * v for u, v in zip(row, prow)]
            nd = d * p
            g = gcd(nd, *new)
            if g > 1:
                new = [v // g for v in new]
                nd //= g
            obj[0] = new
            obj[1] = nd

    def _run(self, obj, limit_col: int) -> bool:
        """Bland-rule primal simplex on ``obj``. Returns False if unbounded."""
        w = self.width
        rows = self.rows
        while True:
            orow = obj[0]
            enter = -1
            for j in range(limit_col):
                if orow[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return True
            best = -1
            bnum = bden = 0
            for i, row in enumerate(rows):
                a = row[enter]
                if a > 0:
                    b = row[w]
                    if best < 0:
                        best, bnum, bden = i, b, a
                        continue
                    lhs, rhs = b * bden, bnum * a
                    if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[best]):
                        best, bnum, bden = i, b, a
            if best < 0:
                return False
            self._pivot(best, enter)

    def phase1(self) -> bool:
        """Drive artificial mass to zero. Returns False if impossible."""
        if self.obj1 is None:
            return True
        self._run(self.obj1, self.width)
        if self.obj1[0][self.width] < 0:
            return False
        # pivot zero-level artificials out of the basis; drop redundant rows
        i = 0
        while i < len(self.rows):
            if self.basis[i] >= self.first_art:
                row = self.rows[i]
                col = next((j for j in range(self.first_art) if row[j]), -1)
                if col < 0:
                    del self.rows[i], self.dens[i], self.basis[i]
                    continue
                self._pivot(i, col)
            i += 1
        self.obj1 = None
        return True

    def phase2(self) -> bool:
        return self._run(self.obj2, self.first_art)

    def point(self) -> dict:
        w = self.width
        colval = {}
        for i, b in enumerate(self.basis):
            num = self.rows[i][w]
            if num:
                colval[b] = Fraction(num, self.dens[i])
        point = {}
        for v, cols in self.col_of.items():
            val = colval.get(cols[0], Fraction(0))
            if len(cols) == 2:
                val -= colval.get(cols[1], Fraction(0))
            point[v] = val
        return point


def _check(problem: LpProblem, point: dict) -> None:
    if not problem.is_feasible_point(point):
        raise InvariantViolation("simplex returned a point violating the constraints")


def solve(problem: LpProblem) -> LpOutcome:
    """Solve ``problem`` exactly.

    The returned optimal point is the basic solution of the final basis; only
    its value and feasibility are meaningful to callers.
    """
    tab = _Tableau(problem)
    if not tab.phase1():
        return Infeasible()
    if not tab.phase2():
        return Unbounded()
    point = tab.point()
    if __debug__:
        _check(problem, point)
    return Optimal(problem.objective_value(point), point)


def feasible(problem: LpProblem) -> bool:
    """True iff the constraint set of ``problem`` has a point."""
    return _Tableau(problem).phase1()


def feasible_point(problem: LpProblem):
    """A feasible point of ``problem``, or None."""
    tab = _Tableau(problem)
    if not tab.phase1():
        return None
    point = tab.point()
    if __debug__:
        _check(problem, point)
    return point
