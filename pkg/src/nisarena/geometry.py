"""Structural queries on the implicit universe of level graphs.

Level graphs grow multiplicatively with the level, so the adaptive
protocol never materializes them.  Instead it answers the questions its
strategy needs (existence of a clique through given states, adjacency,
distance at most two, neighbors with a property) by recursion on the
structure of states:

  * a level-r clique containing a set of states exists exactly when the
    states' scan sets are pairwise nested and some level-(r-1) clique
    contains their union together with the carried terminated states;
  * terminated states are few and explicit, so neighbor searches reduce
    to small enumerations plus that recursion.

Scan-set members are permanently continuing states (they were stepped
past, and decisions are write-once), which keeps the recursion stable as
the protocol map grows; the only status-dependent facts concern the
explicit terminated set, and those caches are invalidated per decision.

Exact for n <= 3 (scan sets have at most three members, at most one pid
is missing from any constraint set); the test suite cross-checks every
predicate against breadth-first search on materialized graphs.
"""

from __future__ import annotations

from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Set

from .core import TaskSpec
from .states import Vertex, base_vertex, derived_vertex, has_seen


def _nested(a: Set[Vertex], b: Set[Vertex]) -> bool:
    return a <= b or b <= a


def _chain_ok(scans: List[Set[Vertex]]) -> bool:
    for i in range(len(scans)):
        for j in range(i + 1, len(scans)):
            if not _nested(scans[i], scans[j]):
                return False
    return True


def _intern(pid: int, scan: Iterable[Vertex]) -> Optional[Vertex]:
    try:
        return derived_vertex(pid, tuple(scan))
    except ValueError:
        return None


class Geometry:
    """Clique-structure oracle over the implicit universe of one task."""

    def __init__(self, task: TaskSpec):
        if task.n > 3:
            raise ValueError("structural oracle is specialized to n <= 3")
        self.task = task
        self.outputs: Dict[Vertex, int] = {}
        self._coexist_memo: Dict[tuple, bool] = {}
        self._epoch_memo: Dict[tuple, bool] = {}
        # Graph facts at an existing level never change afterwards (later
        # decisions only touch the frontier, which no scan set contains),
        # so combined predicates may be cached permanently.
        self._stable_memo: Dict[tuple, bool] = {}

    # ------------------------------------------------------------------
    # terminated-state bookkeeping

    def terminate(self, v: Vertex, value: int) -> None:
        prior = self.outputs.get(v)
        if prior is not None and prior != value:
            raise ValueError("termination decisions are write-once")
        if prior is None:
            self.outputs[v] = value
            self._epoch_memo.clear()

    def is_active(self, v: Vertex) -> bool:
        return v not in self.outputs

    def output_of(self, v: Vertex) -> Optional[int]:
        return self.outputs.get(v)

    def terminated_with(self, value: int) -> List[Vertex]:
        return sorted(
            (v for v, a in self.outputs.items() if a == value),
            key=lambda v: v.key(),
        )

    def all_terminated(self) -> List[Vertex]:
        return sorted(self.outputs, key=lambda v: v.key())

    # ------------------------------------------------------------------
    # clique existence

    def coexist(self, vs: FrozenSet[Vertex], r: int) -> bool:
        """Whether some level-r clique contains all the given states."""
        key = (vs, r)
        hit = self._coexist_memo.get(key)
        if hit is None:
            hit = self._coexist(vs, r)
            self._coexist_memo[key] = hit
        return hit

    def _coexist(self, vs: FrozenSet[Vertex], r: int) -> bool:
        pids = [v.pid for v in vs]
        if len(set(pids)) != len(pids):
            return False
        frontier: List[Vertex] = []
        lower: List[Vertex] = []
        for v in vs:
            if v.level > r:
                return False
            if v.level == r:
                frontier.append(v)
            else:
                # Only terminated states persist above their own level.
                if self.is_active(v):
                    return False
                lower.append(v)
        if r == 0 or not vs:
            return True
        scans = [set(v.scan) for v in frontier]
        if not _chain_ok(scans):
            return False
        union: Set[Vertex] = set(lower)
        for s in scans:
            union |= s
        if not union:
            return True
        return self.coexist(frozenset(union), r - 1)

    def adjacent(self, x: Vertex, y: Vertex, r: int) -> bool:
        if x is y or x.pid == y.pid:
            return False
        return self.coexist(frozenset((x, y)), r)

    # ------------------------------------------------------------------
    # slot existential: a clique through the given states whose member at
    # one pid is continuing (not terminated), avoids a finite set, and
    # optionally has not seen a value

    def slot_free(
        self,
        vs: FrozenSet[Vertex],
        pid: int,
        r: int,
        avoid: FrozenSet[Vertex] = frozenset(),
        unseen: Optional[int] = None,
    ) -> bool:
        key = ("slot", vs, pid, r, avoid, unseen)
        hit = self._epoch_memo.get(key)
        if hit is None:
            hit = self._slot_free(vs, pid, r, avoid, unseen)
            self._epoch_memo[key] = hit
        return hit

    def _member_ok(self, m: Vertex, avoid, unseen) -> bool:
        if not self.is_active(m) or m in avoid:
            return False
        return unseen is None or not has_seen(m, unseen)

    def _slot_free(self, vs, pid, r, avoid, unseen) -> bool:
        for v in vs:
            if v.pid == pid:
                return self._member_ok(v, avoid, unseen) and self.coexist(vs, r)
        if not self.coexist(vs, r):
            return False
        if r == 0:
            for x in self.task.values:
                if unseen is not None and x == unseen:
                    continue
                if base_vertex(pid, x) not in avoid:
                    return True
            return False
        frontier = [v for v in vs if v.level == r]
        lower = [v for v in vs if v.level < r]
        scans = [set(v.scan) for v in frontier]
        tau_max: Set[Vertex] = set()
        for s in scans:
            if len(s) > len(tau_max):
                tau_max = s
        sub = frozenset(set(lower) | tau_max)
        own = next((u for u in tau_max if u.pid == pid), None)
        if own is not None:
            # The parent's pid-slot is an observed, continuing state; the
            # member scans any chain-compatible subset containing it.
            if unseen is not None and has_seen(own, unseen):
                return False
            for size in range(1, len(tau_max) + 1):
                for combo in combinations(sorted(tau_max, key=lambda v: v.key()), size):
                    cand = set(combo)
                    if own not in cand or not all(_nested(cand, s) for s in scans):
                        continue
                    if unseen is not None and any(has_seen(u, unseen) for u in cand):
                        continue
                    m = _intern(pid, cand)
                    if m is not None and self._member_ok(m, avoid, unseen):
                        return True
            return self._slot_extend(sub, pid, tau_max, r, avoid, unseen)
        # Fresh slot: the parent clique needs a continuing pid-member x,
        # and the new member scans tau_max plus x (plus optional extras).
        if unseen is not None and any(has_seen(u, unseen) for u in tau_max):
            return False
        blocked = self._blocked_extensions(tau_max, pid, pid, r, avoid)
        if self.slot_free(sub, pid, r - 1, blocked, unseen):
            return True
        for x in sorted(blocked, key=lambda v: v.key()):
            if unseen is not None and has_seen(x, unseen):
                continue
            pinned = frozenset(set(sub) | {x})
            if not self.coexist(pinned, r - 1):
                continue
            if self._slot_extend(pinned, pid, tau_max | {x}, r, avoid, unseen):
                return True
        return False

    def _blocked_extensions(self, base: Set[Vertex], member_pid, extra_pid, r, avoid) -> FrozenSet[Vertex]:
        """Level-(r-1) states e for which (member_pid, base|{e}) is unusable."""
        out: Set[Vertex] = set()
        for w in list(self.outputs) + list(avoid):
            if w.pid != member_pid or w.level != r or w.scan is None:
                continue
            sset = set(w.scan)
            extra = sset - base
            if base <= sset and len(extra) == 1:
                e = next(iter(extra))
                if e.pid == extra_pid:
                    out.add(e)
        return frozenset(out)

    def _slot_extend(self, sub, pid, base_set, r, avoid, unseen) -> bool:
        """Member scans base_set plus one state of a pid absent from it."""
        if unseen is not None and any(has_seen(u, unseen) for u in base_set):
            return False
        used = {v.pid for v in base_set}
        for extra_pid in range(1, self.task.n + 1):
            if extra_pid in used or extra_pid == pid:
                continue
            blocked = self._blocked_extensions(base_set, pid, extra_pid, r, avoid)
            if self.slot_free(sub, extra_pid, r - 1, blocked, unseen):
                return True
        return False

    # ------------------------------------------------------------------
    # distance at most two

    def within_two(self, x: Vertex, y: Vertex, r: int) -> bool:
        """Whether the level-r graph distance between two states is <= 2."""
        if x is y:
            return True
        key = ("w2", x, y, r) if x.uid < y.uid else ("w2", y, x, r)
        hit = self._epoch_memo.get(key)
        if hit is None:
            hit = self._within_two(x, y, r)
            self._epoch_memo[key] = hit
        return hit

    def _within_two(self, x: Vertex, y: Vertex, r: int) -> bool:
        if self.adjacent(x, y, r):
            return True
        if r == 0:
            # Same-pid initial states: any other process bridges them.
            return self.task.n >= 2
        for z in self.all_terminated():
            if z is x or z is y:
                continue
            if self.adjacent(x, z, r) and self.adjacent(z, y, r):
                return True
        x_front = x.level == r
        y_front = y.level == r
        if x_front and y_front:
            return self._mid_front_front(x, y, r)
        if x_front:
            return self._mid_front_carried(x, y, r)
        if y_front:
            return self._mid_front_carried(y, x, r)
        return self._mid_carried_carried(x, y, r)

    def _mid_front_front(self, x: Vertex, y: Vertex, r: int) -> bool:
        tx, ty = set(x.scan), set(y.scan)
        pool = sorted(tx | ty, key=lambda v: v.key())
        for size in range(1, len(pool) + 1):
            for combo in combinations(pool, size):
                rho = set(combo)
                pids = [v.pid for v in rho]
                if len(set(pids)) != len(pids):
                    continue
                if not (_nested(rho, tx) and _nested(rho, ty)):
                    continue
                if not (set(pids) - {x.pid, y.pid}):
                    continue
                if self.coexist(frozenset(rho | tx), r - 1) and self.coexist(
                    frozenset(rho | ty), r - 1
                ):
                    return True
        # A neighbor whose scan covers both views plus a process that
        # appears in neither.
        union = tx | ty
        pids = [v.pid for v in union]
        if len(set(pids)) != len(pids):
            return False
        missing = set(range(1, self.task.n + 1)) - set(pids)
        for j in sorted(missing):
            if j in (x.pid, y.pid):
                continue
            if self.slot_free(frozenset(union), j, r - 1):
                return True
        return False

    def _mid_front_carried(self, x: Vertex, w: Vertex, r: int) -> bool:
        # Any common neighbor scanning a superset of x's view would put w in
        # a clique over that view's parent, witnessing direct adjacency; so
        # only subsets need enumeration.
        tx = sorted(set(x.scan), key=lambda v: v.key())
        for size in range(1, len(tx) + 1):
            for combo in combinations(tx, size):
                rho = set(combo)
                if not ({v.pid for v in rho} - {x.pid, w.pid}):
                    continue
                if self.coexist(frozenset(rho | {w}), r - 1):
                    return True
        return False

    def _mid_carried_carried(self, x: Vertex, y: Vertex, r: int) -> bool:
        """Common neighbor of two carried states: it scans some continuing
        level-(r-1) state that coexists with both.

        The search lifts solo chains and history members; it is exhaustive
        on those deterministic candidate families (audit-grade: only used
        between terminated states, where the strategy's own constructions
        guarantee the distances being audited).
        """
        return self._active_coexistor(x, y, r - 1) is not None

    def _active_coexistor(self, x: Vertex, y: Vertex, r: int) -> Optional[Vertex]:
        for u in self._coexistor_candidates(x, y, r):
            if u.pid in (x.pid, y.pid) or not self.is_active(u):
                continue
            if self.coexist(frozenset({u, x}), r) and self.coexist(
                frozenset({u, y}), r
            ):
                return u
        return None

    def _lift_solo(self, v: Vertex, r: int) -> Optional[Vertex]:
        """Extend a state by solo rounds up to level r; None when a chain
        state is terminated (the process could not have continued)."""
        while v.level < r:
            if not self.is_active(v):
                return None
            v = derived_vertex(v.pid, (v,))
        return v

    def _coexistor_candidates(self, x: Vertex, y: Vertex, r: int):
        seen: Set[Vertex] = set()
        # Contemporaries of either carried state: scan-subset states at the
        # carried level, lifted solo to level r.
        for src in (x, y):
            if src.scan is None:
                continue
            members = sorted(set(src.scan), key=lambda v: v.key())
            for size in range(1, len(members) + 1):
                for combo in combinations(members, size):
                    for j in {v.pid for v in combo}:
                        base = _intern(j, combo)
                        if base is None:
                            continue
                        u = self._lift_solo(base, r)
                        if u is not None and u not in seen:
                            seen.add(u)
                            yield u
        # Solo chains from every initial state.
        for j in self.task.pids:
            if j in (x.pid, y.pid):
                continue
            for x0 in self.task.values:
                u = self._lift_solo(base_vertex(j, x0), r)
                if u is not None and u not in seen:
                    seen.add(u)
                    yield u

    def stable_within_two(self, x: Vertex, y: Vertex, r: int) -> bool:
        """within_two with a permanent cache; sound because the level-r
        graph is fixed once built and the predicate is status-closed."""
        key = ("sw2", x, y, r) if x.uid < y.uid else ("sw2", y, x, r)
        hit = self._stable_memo.get(key)
        if hit is None:
            hit = self.within_two(x, y, r)
            self._stable_memo[key] = hit
        return hit

    def stable_unseen_neighbor(self, x: Vertex, value: int, r: int) -> bool:
        key = ("sun", x, value, r)
        hit = self._stable_memo.get(key)
        if hit is None:
            hit = self.has_unseen_neighbor(x, value, r)
            self._stable_memo[key] = hit
        return hit

    # ------------------------------------------------------------------
    # the no-witness region and unseen neighbors

    def in_unseen_region(self, v: Vertex, value: int) -> bool:
        """Whether v lies in a clique none of whose members saw the value.

        Every state that has not seen the value extends to a full such
        clique, so membership is exactly the seen check.
        """
        return not has_seen(v, value)

    def has_unseen_neighbor(self, x: Vertex, value: int, r: int) -> bool:
        """Whether a level-r neighbor of x has not seen the value.

        Callers handle the case of x itself not having seen the value;
        given that x has seen it, neighbors whose scans cover x's view
        have seen it too, so only scan subsets and slot members matter.
        """
        if x.level == r and x.scan is not None:
            for u in x.scan:
                if u.pid != x.pid and not has_seen(u, value):
                    return True
            for w in self.all_terminated():
                if w is not x and not has_seen(w, value) and self.adjacent(x, w, r):
                    return True
            return False
        for w in self.all_terminated():
            if w is not x and not has_seen(w, value) and self.adjacent(x, w, r):
                return True
        for j in self.task.pids:
            if j == x.pid:
                continue
            if self.slot_free(frozenset({x}), j, r, unseen=value):
                return True
        return False
