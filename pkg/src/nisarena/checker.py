"""Cross-cutting verification: literal invariant audits, lemma suites,
brute-force oracles, and transcript replay.

Everything here prefers the slow, independent route: materialized graphs,
breadth-first distances, exhaustive schedule enumeration.  The adaptive
protocol's own structural bookkeeping is checked against these at scales
where both can run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random
from typing import Dict, List, Optional, Set

from .adversary import Adversary
from .core import (
    Configuration,
    TaskSpec,
    apply_schedule,
    one_round_schedules,
)
from .levelgraph import (
    CapExceeded,
    Caps,
    LevelGraph,
    initial_graph,
    is_connected,
    set_distance,
    subdivide_clique,
    subdivide_graph,
    terminated_set,
    unseen_cliques,
)
from .reach import explore
from .states import CompletedDelta, DeltaMap, Status, Vertex, has_seen


def oracle_one_round(conf: Configuration, delta) -> Set[Configuration]:
    """Brute-force application of every one-round schedule."""
    completed = CompletedDelta(delta)
    return {
        apply_schedule(conf, sched, completed)
        for sched in one_round_schedules(conf)
    }


# ----------------------------------------------------------------------
# literal invariant audit over materialized graphs


@dataclass
class InvariantFinding:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class InvariantReport:
    findings: List[InvariantFinding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(f.passed for f in self.findings)

    def add(self, name, passed, detail=""):
        self.findings.append(InvariantFinding(name, passed, detail))

    def summary(self) -> str:
        return "\n".join(
            f"{'PASS' if f.passed else 'FAIL'} {f.name}" + (f": {f.detail}" if f.detail else "")
            for f in self.findings
        )


def materialize_protocol(
    adv: Adversary, caps: Caps = Caps(), up_to: Optional[int] = None
) -> List[LevelGraph]:
    """Rebuild the protocol's level graphs up to a level (default: all).

    Raises CapExceeded when the level or clique caps would be crossed;
    callers then rely on the protocol's structural audit instead.
    """
    task = adv.task
    top = adv.t if up_to is None else min(up_to, adv.t)
    graphs = [initial_graph(task)]
    delta = DeltaMap()
    for v in graphs[0].vertices:
        delta.set_continue(v)
    for lvl in range(1, top + 1):
        g = subdivide_graph(graphs[-1], delta, caps)
        graphs.append(g)
        for v in g.vertices:
            if delta.defined(v):
                continue
            out = adv.geo.output_of(v)
            if out is not None:
                delta.set_output(v, out)
            elif lvl < adv.t:
                delta.set_continue(v)
    return graphs


def audit_invariants(
    adv: Adversary, session=None, caps: Caps = Caps()
) -> InvariantReport:
    """Evaluate the six interaction invariants literally.

    Uses breadth-first distances over materialized graphs; independent of
    the protocol's own structural reasoning.
    """
    report = InvariantReport()
    graphs = materialize_protocol(adv, caps)
    gt = graphs[-1]
    geo = adv.geo
    t = adv.t

    # 1: everything below the frontier is decided (true by the level rule,
    # violated only if a termination sits above the frontier).
    bad = [v for v in geo.outputs if v.level > t]
    report.add("decided-below-frontier", not bad, f"{len(bad)} terminations above level {t}")

    # 2: no frontier state is marked continuing.
    cont = [
        v
        for v in gt.vertices
        if v.level == t and adv.delta.status(v) is Status.CONTINUE
    ]
    report.add("frontier-undecided-or-output", not cont, f"{len(cont)} continuing")

    # 3: issued configurations match their provenance schedules.
    ok3, detail3 = True, ""
    registered = adv.registered if session is None else {
        c: prov
        for c, prov in adv.registered.items()
    }
    for conf, (origin, sched) in registered.items():
        counts: Dict[int, int] = {}
        for pid in sched:
            counts[pid] = counts.get(pid, 0) + 1
        for pid in adv.task.pids:
            c = counts.get(pid, 0)
            s = conf.state(pid)
            if c > 2 * t + 1 or s.vertex.level != c // 2:
                ok3, detail3 = False, f"config {conf.key()[:12]} pid {pid}"
                break
            if c % 2 == 0 and s.active and adv.delta.status(s.vertex) is Status.UNDEFINED:
                ok3, detail3 = False, f"undecided issued state {s.vertex!r}"
                break
        if not ok3:
            break
    report.add("provenance-counts", ok3, detail3)

    # 4 and 5: distances via breadth-first search.
    for a in adv.task.values:
        tset = terminated_set(gt, adv.delta, a) & gt.vertices
        if not tset:
            continue
        region = unseen_cliques(gt, a).vertices
        if region:
            d = set_distance(gt, tset, region)
            ok = d is None or d >= 2
            report.add(
                f"terminated-{a}-far-from-unseen",
                ok,
                "" if ok else f"distance {d}",
            )
    vals = list(adv.task.values)
    for i, a in enumerate(vals):
        for b in vals[i + 1 :]:
            ta = terminated_set(gt, adv.delta, a) & gt.vertices
            tb = terminated_set(gt, adv.delta, b) & gt.vertices
            if ta and tb:
                d = set_distance(gt, ta, tb)
                ok = d is None or d >= 3
                report.add(
                    f"terminated-{a}-{b}-separated",
                    ok,
                    "" if ok else f"distance {d}",
                )

    # 6: frozen states lie in the unseen region or beside another value.
    view = CompletedDelta(adv.delta)
    for idx, rec in enumerate(adv.frozen):
        members: Set[Vertex] = set()
        if rec.explicit is not None and rec.level == t:
            members = set(rec.explicit)
        else:
            try:
                _, frontier = explore(rec.conf, rec.qset, view, t, budget=60000)
                members = set(frontier)
            except Exception:
                report.add(f"frozen-{idx}", True, "scope too wide to re-enumerate")
                continue
        bad = []
        for v in members:
            if not has_seen(v, rec.value):
                continue
            out = geo.output_of(v)
            if out is not None and out != rec.value:
                continue
            near = False
            for b in adv.task.values:
                if b == rec.value:
                    continue
                for w in geo.terminated_with(b):
                    if v is w or (w in gt.vertices and v in gt.vertices and geo.adjacent(v, w, t)):
                        near = True
                        break
                if near:
                    break
            if not near:
                bad.append(v)
        report.add(
            f"frozen-{idx}-justified",
            not bad,
            "" if not bad else f"{len(bad)} unjustified states",
        )
    return report


# ----------------------------------------------------------------------
# transcript replay


@dataclass
class ReplayIssue:
    seq: int
    detail: str


def replay_transcript(adv: Adversary, strict_none: bool = True) -> List[ReplayIssue]:
    """Re-execute a finished interaction against the final protocol map.

    Every step response must reproduce bit-for-bit; every returned
    schedule must still yield the promised output; every NONE answer must
    still be unreachable within its scope.
    """
    from .core import apply_step

    issues: List[ReplayIssue] = []
    by_key: Dict[str, Configuration] = {c.key(): c for c in adv.registered}
    for event in adv.transcript:
        kind = event["kind"]
        if kind == "step":
            conf = by_key.get(event["request"]["config"])
            if conf is None:
                issues.append(ReplayIssue(event["seq"], "request config unknown"))
                continue
            got = apply_step(conf, event["request"]["process"], adv.delta)
            if got.key() != event["response"]:
                issues.append(ReplayIssue(event["seq"], "step response drifted"))
        elif kind == "output":
            conf = by_key.get(event["request"]["config"])
            if conf is None:
                issues.append(ReplayIssue(event["seq"], "request config unknown"))
                continue
            qset = frozenset(event["request"]["processes"])
            value = event["request"]["value"]
            sched = event["response"]
            if sched is not None:
                try:
                    end = apply_schedule(conf, tuple(sched), adv.delta)
                except Exception as exc:
                    issues.append(ReplayIssue(event["seq"], f"schedule unreplayable: {exc}"))
                    continue
                hit = any(
                    end.state(pid).output == value for pid in qset
                )
                if not hit:
                    issues.append(
                        ReplayIssue(event["seq"], "schedule no longer outputs the value")
                    )
            elif strict_none and adv.finalized:
                try:
                    answer = adv._output_query_final(conf, qset, value)
                except Exception as exc:
                    issues.append(ReplayIssue(event["seq"], f"none-recheck failed: {exc}"))
                    continue
                if answer is not None:
                    issues.append(
                        ReplayIssue(event["seq"], "a schedule now exists where none was claimed")
                    )
    return issues


# ----------------------------------------------------------------------
# lemma property suites over materialized graphs


_WORLD_CACHE: Dict[tuple, tuple] = {}


def cached_world(task: TaskSpec, levels: int, seed: int, p_term: float):
    key = (task.n, task.k, levels, seed, p_term)
    hit = _WORLD_CACHE.get(key)
    if hit is None:
        hit = random_world(task, levels, seed, p_term)
        _WORLD_CACHE[key] = hit
    return hit


def random_world(task: TaskSpec, levels: int, seed: int, p_term: float):
    """A random protocol-map evolution with its materialized level graphs."""
    rng = Random(seed)
    g = initial_graph(task)
    delta = DeltaMap({v: None for v in g.vertices})
    graphs = [g]
    for lvl in range(1, levels + 1):
        g = subdivide_graph(g, delta)
        graphs.append(g)
        frontier = sorted(
            (v for v in g.vertices if v.level == lvl and not delta.defined(v)),
            key=lambda v: v.key(),
        )
        for v in frontier:
            if rng.random() < p_term:
                delta.set_output(v, rng.randrange(task.k + 1))
            elif lvl < levels:
                delta.set_continue(v)
    return graphs, delta


def _random_union(graph: LevelGraph, rng: Random, max_cliques: int = 5) -> LevelGraph:
    cliques = sorted(graph.cliques, key=lambda c: sorted(v.key() for v in c.vertices))
    take = rng.randint(1, min(max_cliques, len(cliques)))
    return LevelGraph(graph.level, rng.sample(cliques, take))


def _connected_union(graph: LevelGraph, rng: Random, max_cliques: int = 5) -> LevelGraph:
    cliques = sorted(graph.cliques, key=lambda c: sorted(v.key() for v in c.vertices))
    start = rng.choice(cliques)
    chosen = [start]
    verts = set(start.vertices)
    for _ in range(rng.randint(0, max_cliques - 1)):
        touching = [
            c for c in cliques if c not in chosen and verts & set(c.vertices)
        ]
        if not touching:
            break
        nxt = rng.choice(touching)
        chosen.append(nxt)
        verts |= set(nxt.vertices)
    return LevelGraph(graph.level, chosen)


def _fill_continue(delta: DeltaMap, graph: LevelGraph) -> DeltaMap:
    d = delta.copy()
    for v in graph.vertices:
        if not d.defined(v):
            d.set_continue(v)
    return d


LEMMA_NAMES = [
    "clique-subdivision-connected",
    "union-subdivision-connected",
    "levels-connected",
    "disjointness-preserved",
    "distance-monotone",
    "separation-at-least-2",
    "distance-strict-growth",
    "terminated-carry",
    "unseen-commutes",
    "unseen-extension",
]


HEAVY_LEMMAS = {
    "disjointness-preserved",
    "distance-monotone",
    "separation-at-least-2",
    "distance-strict-growth",
    "unseen-commutes",
}


def check_lemma(name: str, task: TaskSpec, seed: int) -> Optional[str]:
    """One randomized instance of a named lemma; None if it holds.

    Lemmas whose statement needs the whole next level draw shallower
    worlds so the ambient subdivision stays affordable.
    """
    rng = Random(seed)
    deep = 2 if task.n >= 3 else 3
    levels = 1 if (name in HEAVY_LEMMAS and task.n >= 3) else rng.randint(1, deep)
    graphs, delta = cached_world(
        task, levels, rng.randrange(24), rng.choice([0.0, 0.1, 0.3])
    )
    g = graphs[-1]
    filled = _fill_continue(delta, g)

    if name == "clique-subdivision-connected":
        c = rng.choice(sorted(g.cliques, key=lambda c: sorted(v.key() for v in c)))
        frag = subdivide_clique(c, filled)
        return None if is_connected(frag) else f"clique at level {g.level}"

    if name == "union-subdivision-connected":
        a = _connected_union(g, rng)
        if not is_connected(a):
            return None
        chi = subdivide_graph(a, filled)
        return None if is_connected(chi) else "subdivision disconnected"

    if name == "levels-connected":
        return None if all(is_connected(x) for x in graphs) else "level graph disconnected"

    if name == "disjointness-preserved":
        a = _random_union(g, rng)
        b = _random_union(g, rng)
        ca, cb = subdivide_graph(a, filled), subdivide_graph(b, filled)
        before = bool(a.vertices & b.vertices)
        after = bool(ca.vertices & cb.vertices)
        return None if before == after else f"intersection {before} -> {after}"

    if name == "distance-monotone":
        a = _random_union(g, rng)
        b = _random_union(g, rng)
        whole = subdivide_graph(g, filled)
        ca, cb = subdivide_graph(a, filled), subdivide_graph(b, filled)
        d0 = set_distance(g, a.vertices, b.vertices)
        d1 = set_distance(whole, ca.vertices, cb.vertices)
        if d0 is None:
            return None
        return None if (d1 is None or d1 >= d0) else f"{d0} -> {d1}"

    if name == "separation-at-least-2":
        # A, B, C unions of cliques; A and B disjoint, each meeting C; C all
        # continuing.
        act = [
            c
            for c in g.cliques
            if all(filled.status(v) is Status.CONTINUE for v in c.vertices)
        ]
        if len(act) < 2:
            return None
        cl = LevelGraph(g.level, rng.sample(sorted(act, key=lambda c: sorted(v.key() for v in c)), min(len(act), 4)))
        a = _random_union(g, rng)
        b = _random_union(g, rng)
        if a.vertices & b.vertices:
            return None
        if not (a.vertices & cl.vertices) or not (b.vertices & cl.vertices):
            return None
        whole = subdivide_graph(g, filled)
        ca, cb, cc = (
            subdivide_graph(a, filled),
            subdivide_graph(b, filled),
            subdivide_graph(cl, filled),
        )
        lhs = ca.vertices & cc.vertices
        rhs = cb.vertices & cc.vertices
        if not lhs or not rhs:
            return "subdivided intersections empty"
        d = set_distance(whole, lhs, rhs)
        return None if (d is None or d >= 2) else f"distance {d}"

    if name == "distance-strict-growth":
        a = _random_union(g, rng)
        b = _random_union(g, rng)
        d0 = set_distance(g, a.vertices, b.vertices)
        if d0 is None or d0 == 0:
            return None
        # hypothesis: every path between them crosses an edge between
        # continuing states; check by deleting those edges.
        adj = {v: set(us) for v, us in g.adjacency.items()}
        for u in list(adj):
            for v in list(adj[u]):
                if (
                    filled.status(u) is Status.CONTINUE
                    and filled.status(v) is Status.CONTINUE
                ):
                    adj[u].discard(v)
                    adj[v].discard(u)
        frontier = set(a.vertices)
        seenv = set(frontier)
        while frontier:
            nxt = set()
            for v in frontier:
                nxt |= adj[v] - seenv
            seenv |= nxt
            frontier = nxt
        if seenv & b.vertices:
            return None  # hypothesis fails: some path avoids active edges
        whole = subdivide_graph(g, filled)
        ca, cb = subdivide_graph(a, filled), subdivide_graph(b, filled)
        d1 = set_distance(whole, ca.vertices, cb.vertices)
        return None if (d1 is None or d1 > d0) else f"{d0} -> {d1}"

    if name == "terminated-carry":
        tset = {
            v
            for v in g.vertices
            if filled.status(v) is Status.OUTPUT
        }
        if not tset:
            return None
        whole = subdivide_graph(g, filled)
        return None if tset <= whole.vertices else "terminated states dropped"

    if name == "unseen-commutes":
        a = rng.randrange(task.k + 1)
        whole = subdivide_graph(g, filled)
        lhs = unseen_cliques(whole, a)
        rhs = subdivide_graph(unseen_cliques(g, a), filled) if unseen_cliques(g, a).cliques else LevelGraph(whole.level, [])
        return (
            None
            if lhs.cliques == rhs.cliques
            else f"{len(lhs.cliques)} vs {len(rhs.cliques)} cliques"
        )

    if name == "unseen-extension":
        a = rng.randrange(task.k + 1)
        region = unseen_cliques(g, a).vertices
        for v in g.vertices:
            if not has_seen(v, a) and v not in region:
                return f"state {v.key()[:12]} outside the region"
        return None

    raise ValueError(f"unknown lemma {name!r}")


def run_lemma_suite(task: TaskSpec, instances: int, seed: int = 0):
    """Seeded randomized campaign over every lemma; returns failures."""
    failures = []
    for name in LEMMA_NAMES:
        for i in range(instances):
            detail = check_lemma(name, task, seed * 100003 + i)
            if detail is not None:
                failures.append((name, i, detail))
    return failures
