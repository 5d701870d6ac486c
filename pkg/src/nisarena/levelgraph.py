"""Level graphs: reachable states as unions of n-vertex cliques.

The states reachable by t full rounds form a graph whose vertices are
states and whose edges join states co-occurring in some configuration.
Every edge lies in an n-vertex clique, and cliques correspond exactly to
round-aligned configurations, so cliques are the primary representation;
vertex and edge sets are derived.  One round of execution refines each
clique into the cliques of its subdivision.

Everything here is explicit and materialized, sized for desk-scale graphs;
construction beyond the configured caps raises CapExceeded rather than
truncating.  The adaptive protocol answers the same questions lazily (see
geometry.py) and is tested against this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .core import (
    Configuration,
    ProcessState,
    Stage,
    TaskSpec,
    one_round_schedules,
    apply_schedule,
    round_aligned,
)
from .states import DeltaMap, Status, Vertex, base_vertex, has_seen


class CapExceeded(Exception):
    """A materialized structure would exceed its configured size cap."""


@dataclass(frozen=True)
class Caps:
    max_level: int = 6
    max_cliques: int = 500_000


DEFAULT_CAPS = Caps()


class Clique:
    """n states with pairwise-distinct pids, sorted by pid."""

    __slots__ = ("vertices", "_hash")

    def __init__(self, vertices: Iterable[Vertex]):
        vs = tuple(sorted(vertices, key=lambda v: v.pid))
        pids = [v.pid for v in vs]
        if len(set(pids)) != len(pids):
            raise ValueError("clique pids must be distinct")
        self.vertices = vs
        self._hash = hash(tuple(v.uid for v in vs))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Clique) and self.vertices == other.vertices

    def __repr__(self):
        return f"Clique{self.vertices!r}"

    def __iter__(self):
        return iter(self.vertices)

    def member(self, pid: int) -> Vertex:
        for v in self.vertices:
            if v.pid == pid:
                return v
        raise KeyError(pid)

    def active(self, delta: DeltaMap) -> Tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if delta.status(v) is not Status.OUTPUT)

    def terminated(self, delta: DeltaMap) -> Tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if delta.status(v) is Status.OUTPUT)


class LevelGraph:
    """A union of n-vertex cliques at a given level."""

    def __init__(self, level: int, cliques: Iterable[Clique]):
        self.level = level
        self.cliques = frozenset(cliques)
        self._vertices: Optional[FrozenSet[Vertex]] = None
        self._adjacency: Optional[Dict[Vertex, Set[Vertex]]] = None

    @property
    def vertices(self) -> FrozenSet[Vertex]:
        if self._vertices is None:
            vs: Set[Vertex] = set()
            for c in self.cliques:
                vs.update(c.vertices)
            self._vertices = frozenset(vs)
        return self._vertices

    @property
    def adjacency(self) -> Dict[Vertex, Set[Vertex]]:
        if self._adjacency is None:
            adj: Dict[Vertex, Set[Vertex]] = {v: set() for v in self.vertices}
            for c in self.cliques:
                for u, v in combinations(c.vertices, 2):
                    adj[u].add(v)
                    adj[v].add(u)
            self._adjacency = adj
        return self._adjacency

    def edges(self) -> Set[Tuple[Vertex, Vertex]]:
        out: Set[Tuple[Vertex, Vertex]] = set()
        for c in self.cliques:
            for u, v in combinations(c.vertices, 2):
                out.add((u, v) if u.uid < v.uid else (v, u))
        return out

    def union(self, other: "LevelGraph") -> "LevelGraph":
        if other.level != self.level:
            raise ValueError("cannot union graphs at different levels")
        return LevelGraph(self.level, self.cliques | other.cliques)

    def restrict(self, cliques: Iterable[Clique]) -> "LevelGraph":
        return LevelGraph(self.level, set(cliques) & self.cliques)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.vertices


def initial_graph(task: TaskSpec) -> LevelGraph:
    """Level 0: every pid/input pair, one clique per input assignment."""
    cliques = []

    def rec(prefix: List[Vertex], pid: int):
        if pid > task.n:
            cliques.append(Clique(prefix))
            return
        for x in task.values:
            rec(prefix + [base_vertex(pid, x)], pid + 1)

    rec([], 1)
    return LevelGraph(0, cliques)


def subdivision_sets(clique: Clique, delta: DeltaMap):
    """Literal vertex and edge sets of one clique's subdivision.

    Kept separate from the clique enumeration so the two routes can be
    checked against each other.
    """
    from itertools import chain

    term = clique.terminated(delta)
    act = clique.active(delta)
    for v in clique:
        if delta.status(v) is Status.UNDEFINED:
            raise ValueError(f"delta undefined at {v!r}")
    vertices: Set[Vertex] = set(term)
    for size in range(1, len(act) + 1):
        for tau in combinations(act, size):
            for v in tau:
                vertices.add(_derived(v.pid, tau))
    edges: Set[Tuple[Vertex, Vertex]] = set()
    for u, v in combinations(sorted(vertices, key=lambda w: w.uid), 2):
        if u.pid == v.pid:
            continue
        u_term = u in term
        v_term = v in term
        if u_term or v_term:
            edges.add((u, v))
        elif set(u.scan) <= set(v.scan) or set(v.scan) <= set(u.scan):
            edges.add((u, v))
    return vertices, edges


def _derived(pid: int, tau: Iterable[Vertex]) -> Vertex:
    from .states import derived_vertex

    return derived_vertex(pid, tau)


_SUBDIV_MEMO: Dict[tuple, Tuple[Clique, ...]] = {}


def subdivide_clique(clique: Clique, delta: DeltaMap) -> LevelGraph:
    """All cliques reachable from the clique's configuration in one round."""
    level = max(v.level for v in clique.vertices) + 1
    key = (clique, tuple(delta.status(v) is Status.OUTPUT for v in clique.vertices))
    hit = _SUBDIV_MEMO.get(key)
    if hit is not None:
        return LevelGraph(level, hit)
    term = clique.terminated(delta)
    act = clique.active(delta)
    for v in clique:
        if delta.status(v) is Status.UNDEFINED:
            raise ValueError(f"delta undefined at {v!r}")
    if not act:
        result = (clique,)
        _SUBDIV_MEMO[key] = result
        return LevelGraph(level, result)
    # One new clique per assignment of a scan set to each active pid such
    # that the assigned sets form a chain and each contains its own writer.
    candidates: Dict[int, List[Tuple[Vertex, ...]]] = {}
    for v in act:
        opts = []
        others = [u for u in act if u is not v]
        for size in range(len(others) + 1):
            for extra in combinations(others, size):
                opts.append(tuple(sorted((v,) + extra, key=lambda w: w.pid)))
        candidates[v.pid] = opts
    pids = sorted(candidates)
    out: List[Clique] = []

    def nested(a: Tuple[Vertex, ...], b: Tuple[Vertex, ...]) -> bool:
        sa, sb = set(a), set(b)
        return sa <= sb or sb <= sa

    def rec(idx: int, chosen: List[Tuple[Vertex, ...]]):
        if idx == len(pids):
            members = list(term)
            members.extend(_derived(pid, tau) for pid, tau in zip(pids, chosen))
            out.append(Clique(members))
            return
        for tau in candidates[pids[idx]]:
            if all(nested(tau, prev) for prev in chosen):
                rec(idx + 1, chosen + [tau])

    rec(0, [])
    result = tuple(out)
    _SUBDIV_MEMO[key] = result
    return LevelGraph(level, result)


def subdivide_graph(
    graph: LevelGraph, delta: DeltaMap, caps: Caps = DEFAULT_CAPS
) -> LevelGraph:
    """Union of all clique subdivisions; shared states merge by interning."""
    if graph.level + 1 > caps.max_level:
        raise CapExceeded(f"level {graph.level + 1} above cap {caps.max_level}")
    cliques: Set[Clique] = set()
    for c in graph.cliques:
        cliques.update(subdivide_clique(c, delta).cliques)
        if len(cliques) > caps.max_cliques:
            raise CapExceeded(f"more than {caps.max_cliques} cliques at level {graph.level + 1}")
    return LevelGraph(graph.level + 1, cliques)


def clique_to_configuration(clique: Clique, delta: DeltaMap) -> Configuration:
    states = []
    for v in clique.vertices:
        if delta.status(v) is Status.OUTPUT:
            states.append(ProcessState(v, Stage.DONE, delta.output(v)))
        else:
            states.append(ProcessState(v, Stage.TO_UPDATE))
    return Configuration(states)


def configuration_to_clique(conf: Configuration) -> Clique:
    round_aligned(conf)
    return Clique(s.vertex for s in conf.states)


def correspondence_check(clique: Clique, delta: DeltaMap):
    """Set equality between one-round outcomes and subdivision cliques.

    Returns (ok, detail); detail carries the symmetric difference on failure.
    """
    from .states import CompletedDelta

    completed = CompletedDelta(delta)
    conf = clique_to_configuration(clique, delta)
    reached = {
        apply_schedule(conf, s, completed) for s in one_round_schedules(conf)
    }
    via_cliques = {
        clique_to_configuration(c, completed)
        for c in subdivide_clique(clique, delta).cliques
    }
    if reached == via_cliques:
        return True, ""
    only_sched = {c.key()[:12] for c in reached - via_cliques}
    only_cliq = {c.key()[:12] for c in via_cliques - reached}
    return False, f"schedule-only={sorted(only_sched)} clique-only={sorted(only_cliq)}"


def terminated_set(graph: LevelGraph, delta: DeltaMap, value: int) -> FrozenSet[Vertex]:
    return frozenset(
        v
        for v in graph.vertices
        if delta.status(v) is Status.OUTPUT and delta.output(v) == value
    )


def unseen_cliques(graph: LevelGraph, value: int) -> LevelGraph:
    """Union of the cliques in which no state has seen the value."""
    return LevelGraph(
        graph.level,
        [
            c
            for c in graph.cliques
            if not any(has_seen(v, value) for v in c.vertices)
        ],
    )


def set_distance(
    graph: LevelGraph, sources: Iterable[Vertex], targets: Iterable[Vertex]
) -> Optional[int]:
    """Shortest path length between two vertex sets; None when disconnected."""
    src = set(sources) & graph.vertices
    tgt = set(targets) & graph.vertices
    if not src or not tgt:
        raise ValueError("distance requires nonempty sets within the graph")
    if src & tgt:
        return 0
    adj = graph.adjacency
    frontier = src
    visited = set(src)
    dist = 0
    while frontier:
        dist += 1
        nxt: Set[Vertex] = set()
        for v in frontier:
            for u in adj[v]:
                if u in visited:
                    continue
                if u in tgt:
                    return dist
                visited.add(u)
                nxt.add(u)
        frontier = nxt
    return None


def is_connected(graph: LevelGraph) -> bool:
    vs = graph.vertices
    if not vs:
        return True
    adj = graph.adjacency
    start = next(iter(vs))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(vs)


def _status_label(v: Vertex, delta: DeltaMap) -> str:
    st = delta.status(v)
    if st is Status.OUTPUT:
        return f"out={delta.output(v)}"
    return "active" if st is Status.CONTINUE else "undefined"


def to_json(graph: LevelGraph, delta: DeltaMap) -> str:
    vertices = sorted(graph.vertices, key=lambda v: v.key())
    payload = {
        "level": graph.level,
        "vertices": [
            {
                "key": v.key(),
                "id": v.pid,
                "scan": sorted(u.key() for u in v.scan) if v.scan else [],
                "input": v.value,
                "level": v.level,
                "status": _status_label(v, delta),
            }
            for v in vertices
        ],
        "cliques": sorted(
            sorted(v.key() for v in c.vertices) for c in graph.cliques
        ),
    }
    return json.dumps(payload, indent=None, separators=(",", ":"), sort_keys=True)


def to_dot(graph: LevelGraph, delta: DeltaMap) -> str:
    lines = ["graph level {"]
    for v in sorted(graph.vertices, key=lambda w: w.key()):
        label = f"{v.pid}:{v.level}:{_status_label(v, delta)}"
        lines.append(f'  "{v.key()[:16]}" [label="{label}"];')
    for u, v in sorted(graph.edges(), key=lambda e: (e[0].key(), e[1].key())):
        lines.append(f'  "{u.key()[:16]}" -- "{v.key()[:16]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
