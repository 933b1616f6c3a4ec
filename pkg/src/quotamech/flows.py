"""Integer max-flow with arc lower bounds, and the two reductions built on it.

* Laminar instances with integral quotas reduce to a type-level flow network
  whose maximum flow is an exactly feasible optimal integral assignment.
* The rounding polytope of a fractional assignment is a bounded transportation
  polytope, so an integral member is a feasible flow.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Hashable, Optional

from .core import Instance
from .errors import ContractError, FlowInfeasible, InvariantViolation, NotLaminar

if TYPE_CHECKING:
    from .lottery import RoundingPolytope

SOURCE = "A"
SINK = "B"


@dataclass(frozen=True)
class Arc:
    tail: Hashable
    head: Hashable
    lower: int
    upper: Optional[int]  # None means unbounded

    def __post_init__(self):
        if self.lower < 0 or (self.upper is not None and self.upper < self.lower):
            raise ContractError(f"arc {self.tail}->{self.head} has bounds [{self.lower}, {self.upper}]")


@dataclass
class FlowNetwork:
    source: Hashable = SOURCE
    sink: Hashable = SINK
    arcs: list = field(default_factory=list)

    def add_arc(self, tail, head, lower: int = 0, upper: Optional[int] = None) -> int:
        if head == self.source or tail == self.sink:
            raise ContractError("the source takes no incoming arcs and the sink no outgoing ones")
        self.arcs.append(Arc(tail, head, int(lower), None if upper is None else int(upper)))
        return len(self.arcs) - 1

    @property
    def nodes(self) -> list:
        seen = {self.source: None, self.sink: None}
        for a in self.arcs:
            seen.setdefault(a.tail)
            seen.setdefault(a.head)
        return list(seen)


@dataclass(frozen=True)
class Flow:
    values: tuple
    value: int

    def __getitem__(self, arc_index: int) -> int:
        return self.values[arc_index]


class _Residual:
    def __init__(self):
        self.adj: dict = {}
        # edge = [head, capacity, index of reverse edge in adj[head]]

    def add(self, u, v, cap) -> tuple:
        self.adj.setdefault(u, [])
        self.adj.setdefault(v, [])
        self.adj[u].append([v, cap, len(self.adj[v])])
        self.adj[v].append([u, 0, len(self.adj[u]) - 1])
        return (u, len(self.adj[u]) - 1)

    def augment(self, s, t, limit=None) -> int:
        """Shortest augmenting paths from ``s`` to ``t``; returns the amount pushed."""
        total = 0
        adj = self.adj
        if s not in adj or t not in adj:
            return 0
        while limit is None or total < limit:
            parent = {s: None}
            queue = deque([s])
            while queue and t not in parent:
                u = queue.popleft()
                for k, (v, cap, _) in enumerate(adj[u]):
                    if cap > 0 and v not in parent:
                        parent[v] = (u, k)
                        queue.append(v)
            if t not in parent:
                break
            push = None if limit is None else limit - total
            v = t
            while parent[v] is not None:
                u, k = parent[v]
                cap = adj[u][k][1]
                push = cap if push is None else min(push, cap)
                v = u
            v = t
            while parent[v] is not None:
                u, k = parent[v]
                edge = adj[u][k]
                edge[1] -= push
                adj[v][edge[2]][1] += push
                v = u
            total += push
        return total

    def flow_on(self, ref, cap) -> int:
        u, k = ref
        return cap - self.adj[u][k][1]

    def close(self, ref) -> None:
        u, k = ref
        edge = self.adj[u][k]
        edge[1] = 0
        self.adj[edge[0]][edge[2]][1] = 0


def max_flow_lb(net: FlowNetwork) -> Flow:
    """A maximum source-to-sink flow meeting every arc's lower bound.

    Raises FlowInfeasible when the lower bounds cannot all be met.
    """
    big = 1 + sum(a.upper for a in net.arcs if a.upper is not None) + sum(a.lower for a in net.arcs)
    res = _Residual()
    excess: dict = {}
    refs = []
    caps = []
    for a in net.arcs:
        cap = (big if a.upper is None else a.upper) - a.lower
        refs.append(res.add(a.tail, a.head, cap))
        caps.append(cap)
        if a.lower:
            excess[a.head] = excess.get(a.head, 0) + a.lower
            excess[a.tail] = excess.get(a.tail, 0) - a.lower
    back = res.add(net.sink, net.source, big)
    ss, tt = ("__super_source__",), ("__super_sink__",)
    need = 0
    aux = []
    for node, e in excess.items():
        if e > 0:
            aux.append(res.add(ss, node, e))
            need += e
        elif e < 0:
            aux.append(res.add(node, tt, -e))
    if need and res.augment(ss, tt) < need:
        raise FlowInfeasible("no flow satisfies the arc lower bounds")
    for ref in aux:
        res.close(ref)
    base = res.flow_on(back, big)
    res.close(back)
    extra = res.augment(net.source, net.sink)
    values = tuple(a.lower + res.flow_on(ref, cap) for a, ref, cap in zip(net.arcs, refs, caps))
    value = base + extra
    if value >= big:
        raise ContractError("flow value is unbounded")
    flow = Flow(values, value)
    _verify(net, flow)
    return flow


def _verify(net: FlowNetwork, flow: Flow) -> None:
    balance: dict = {}
    for a, f in zip(net.arcs, flow.values):
        if f < a.lower or (a.upper is not None and f > a.upper):
            raise InvariantViolation(f"flow {f} on {a.tail}->{a.head} outside [{a.lower}, {a.upper}]")
        balance[a.tail] = balance.get(a.tail, 0) - f
        balance[a.head] = balance.get(a.head, 0) + f
    for node, b in balance.items():
        if node not in (net.source, net.sink) and b:
            raise InvariantViolation(f"flow not conserved at {node!r}")
    if -balance.get(net.source, 0) != flow.value:
        raise InvariantViolation("flow value does not match source outflow")


@dataclass
class LaminarNetwork:
    network: FlowNetwork
    type_arcs: dict  # (type, school) -> arc index carrying that type's mass into the school
    constraint_arcs: dict  # (school, types) -> arc index carrying that constraint's mass


def _require_laminar_integral(inst: Instance) -> None:
    if not inst.is_laminar():
        raise NotLaminar("instance is not laminar")
    for c in inst.constraints:
        if c.lower.denominator != 1 or c.upper.denominator != 1:
            raise ContractError("laminar flow reduction needs integral quotas")


def build_laminar_network(inst: Instance) -> LaminarNetwork:
    """Type-level flow network of a laminar instance.

    Each constraint (R, s) is a node u(s, R); a constraint's mass leaves its
    node through an arc bounded by its quotas, toward the smallest constraint
    strictly containing it, or toward the sink. Each type node receives up to
    its count from the source and feeds the smallest constraint containing the
    type. A school whose family does not include the full type set gets an
    unbinding constraint on all types so every type can reach it.
    """
    _require_laminar_integral(inst)
    net = FlowNetwork()
    all_types = frozenset(inst.types)
    total = sum(inst.types.values())
    type_arcs, constraint_arcs = {}, {}
    for t, count in inst.types.items():
        net.add_arc(SOURCE, ("type", t), 0, count)
    for s in inst.schools:
        fam = [(c.types, int(c.lower), int(c.upper)) for c in inst.constraints_at(s)]
        if not any(r == all_types for r, _, _ in fam):
            fam.append((all_types, 0, total))
        for r, lo, hi in fam:
            supersets = [q for q, _, _ in fam if r < q]
            parent = min(supersets, key=len) if supersets else None
            head = SINK if parent is None else ("u", s, parent)
            constraint_arcs[s, r] = net.add_arc(("u", s, r), head, lo, hi)
        for t in inst.types:
            holders = [r for r, _, _ in fam if t in r]
            smallest = min(holders, key=len)
            type_arcs[t, s] = net.add_arc(("type", t), ("u", s, smallest), 0, None)
    return LaminarNetwork(net, type_arcs, constraint_arcs)


def integral_opt_laminar(inst: Instance) -> dict:
    """An exactly feasible integral allocation placing the maximum number at regular schools.

    The flow fixes how many students of each type go to each school; within a
    type, students in instance order take their most preferred remaining seat.
    """
    lam = build_laminar_network(inst)
    flow = max_flow_lb(lam.network)
    seats = {t: {s: flow[lam.type_arcs[t, s]] for s in inst.schools} for t in inst.types}
    alloc = {}
    for st in inst.students:
        free = seats[st.type]
        choice = next((s for s in st.prefs if free[s] > 0), inst.outside)
        if choice != inst.outside:
            free[choice] -= 1
        alloc[st.id] = choice
    return alloc


def laminar_flow_value(inst: Instance) -> int:
    return max_flow_lb(build_laminar_network(inst).network).value


def integral_point_in_polytope(p: "RoundingPolytope", support=None) -> dict:
    """An integral member of ``p`` using only cells in ``support`` (all cells if None).

    Returns the allocation student -> school. Raises FlowInfeasible when the
    restricted polytope has no integral point (hence, being integral, no point).
    """
    net = FlowNetwork()
    cell_arcs = {}
    out = p.outside
    for sid, t in p.students:
        net.add_arc(SOURCE, ("student", sid), 1, 1)
        for s in p.schools + (out,):
            if support is not None and (sid, s) not in support:
                continue
            head = ("phi",) if s == out else ("cell", t, s)
            cell_arcs[sid, s] = net.add_arc(("student", sid), head, 0, 1)
    for (t, s), (lo, hi) in p.type_bounds.items():
        net.add_arc(("cell", t, s), SINK, lo, hi)
    lo, hi = p.outside_bounds
    net.add_arc(("phi",), SINK, lo, hi)
    flow = max_flow_lb(net)
    alloc = {}
    for (sid, s), k in cell_arcs.items():
        if flow[k]:
            alloc[sid] = s
    if len(alloc) != len(p.students):
        raise InvariantViolation("integral point leaves a student unassigned")
    if not p.contains_allocation(alloc):
        raise InvariantViolation("integral point falls outside the rounding polytope")
    return alloc


def is_laminar(inst: Instance) -> bool:
    """Overlapping constraint sets at any one school are nested."""
    return inst.is_laminar()
