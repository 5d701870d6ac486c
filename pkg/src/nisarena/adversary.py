"""The adaptive protocol that answers provers without ever being caught.

Decisions about states (continue or output) are made lazily, one query at
a time, while six invariants relate the terminated sets, the regions that
never saw a value, and the states frozen by NONE answers.  Termination is
granted to a freshly scanned state only when it keeps far enough away
from everything that could later force a contradiction; otherwise the
whole frontier is marked as continuing and the level advances.

Representation notes (sized for levels far beyond anything explicit):
  * the protocol map is a level rule plus the explicit terminated states:
    below the current level everything undecided reads as continue, at
    the level it reads as undefined (or, after commitment, as the closing
    rule over the committed fan);
  * the frozen sets from NONE answers are stored as the answered queries
    themselves; membership is a reachability check at the current level;
  * advancing the level is O(1): nothing is rebuilt, and all distance
    facts are recovered on demand through the structural oracle.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .core import (
    Configuration,
    NisError,
    NotActive,
    Schedule,
    Stage,
    TaskSpec,
    apply_step,
    one_round_schedules,
)
from .geometry import Geometry
from .reach import (
    BudgetExceeded,
    candidate_stream,
    explore,
    reachable_seen_values,
    realizable,
)
from .states import CompletedDelta, Status, Vertex, derived_vertex, has_seen


class StaleConfiguration(NisError):
    """The queried configuration was never issued to the prover."""


class InternalInvariantError(AssertionError):
    """The strategy's own bookkeeping broke; the run must abort."""


class AlreadyFinalized(NisError):
    pass


class EmptyCommit(NisError):
    pass


@dataclass(frozen=True)
class FrozenQuery:
    """A NONE answer: every state its scope can realize is frozen."""

    conf: Configuration
    qset: FrozenSet[int]
    value: int
    reason: str
    explicit: Optional[FrozenSet[Vertex]]
    level: int


class AdaptiveDelta:
    """Protocol map view: explicit outputs plus the level rule."""

    def __init__(self, adversary: "Adversary"):
        self._adv = adversary

    def status(self, v: Vertex) -> Status:
        adv = self._adv
        if not adv.geo.is_active(v):
            return Status.OUTPUT
        if v.level < adv.t:
            return Status.CONTINUE
        if adv.finalized and v.level == adv.t and adv.in_committed_fan(v):
            return Status.OUTPUT
        return Status.UNDEFINED

    def output(self, v: Vertex) -> Optional[int]:
        adv = self._adv
        val = adv.geo.output_of(v)
        if val is not None:
            return val
        if adv.finalized and v.level == adv.t and adv.in_committed_fan(v):
            return adv.closing_value(v)
        return None

    def defined(self, v: Vertex) -> bool:
        return self.status(v) is not Status.UNDEFINED


class Adversary:
    """One interaction's adaptive protocol."""

    def __init__(
        self,
        task: TaskSpec,
        paranoid: bool = True,
        explore_budget: int = 20000,
        stream_limit: int = 400,
    ):
        if task.n > 3:
            raise ValueError("the adaptive protocol is sized for n <= 3")
        self.task = task
        self.geo = Geometry(task)
        self.t = 1
        self.delta = AdaptiveDelta(self)
        self.frozen: List[FrozenQuery] = []
        self.finalized = False
        self.pivot_pid: Optional[int] = None
        self.pivot_value: Optional[int] = None
        self.fan_cliques: Optional[List[FrozenSet[Vertex]]] = None
        self.closing_tsets: Optional[Dict[int, Tuple[Vertex, ...]]] = None
        self._fan_memo: Dict[Vertex, bool] = {}
        self._closing_memo: Dict[Vertex, int] = {}
        self.paranoid = paranoid
        self.explore_budget = explore_budget
        self.stream_limit = stream_limit
        self.registered: Dict[Configuration, Tuple[Configuration, Schedule]] = {}
        self._audited_configs: set = set()
        self._verified_far: set = set()
        self.transcript: List[dict] = []
        self.subdivisions = 0
        self._digest_cache: Optional[Tuple[tuple, str]] = None

    # ------------------------------------------------------------------
    # bookkeeping

    def register(self, conf: Configuration, origin: Configuration, sched: Schedule):
        if conf not in self.registered:
            self.registered[conf] = (origin, tuple(sched))

    def _require_registered(self, conf: Configuration):
        if conf not in self.registered:
            raise StaleConfiguration(conf.key())

    def _view(self):
        return CompletedDelta(self.delta)

    def invariant_digest(self) -> str:
        stamp = (self.t, len(self.geo.outputs), len(self.frozen), self.finalized)
        if self._digest_cache is not None and self._digest_cache[0] == stamp:
            return self._digest_cache[1]
        digest = self._invariant_digest()
        self._digest_cache = (stamp, digest)
        return digest

    def _invariant_digest(self) -> str:
        geo = self.geo
        tsets = {a: [v.key() for v in geo.terminated_with(a)] for a in self.task.values}
        pair_class = {}
        vals = [a for a in self.task.values if tsets[a]]
        for i, a in enumerate(vals):
            for b in vals[i + 1 :]:
                cls = ">=3"
                for wa in geo.terminated_with(a):
                    for wb in geo.terminated_with(b):
                        if geo.adjacent(wa, wb, self.t):
                            cls = "1"
                        elif geo.within_two(wa, wb, self.t) and cls != "1":
                            cls = "2"
                pair_class[f"{a},{b}"] = cls
        payload = {
            "t": self.t,
            "terminated": tsets,
            "frozenQueries": len(self.frozen),
            "tPairs": pair_class,
            "finalized": self.finalized,
        }
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()

    def _record(self, kind: str, request: dict, response):
        self.transcript.append(
            {
                "seq": len(self.transcript),
                "kind": kind,
                "request": request,
                "response": response,
                "tAfter": self.t,
                "invariantDigest": self.invariant_digest(),
            }
        )
        if self.paranoid:
            self.audit()

    # ------------------------------------------------------------------
    # the frozen sets

    def x_contains(self, v: Vertex, value: int) -> bool:
        view = self._view()
        for rec in self.frozen:
            if rec.value != value:
                continue
            if rec.explicit is not None and rec.level == self.t:
                if v in rec.explicit:
                    return True
                continue
            if realizable(rec.conf, rec.qset, v, view, self.t) is not None:
                return True
        return False

    # ------------------------------------------------------------------
    # admissibility of terminating a frontier state

    def _far_from_unseen_region(self, v: Vertex, a: int) -> bool:
        """Distance at least 2 between the state and the no-witness region."""
        geo = self.geo
        if not has_seen(v, a):
            return False
        for u in v.scan:
            if u.pid != v.pid and not has_seen(u, a):
                return False
        for w in geo.all_terminated():
            if w is not v and not has_seen(w, a) and geo.adjacent(v, w, self.t):
                return False
        return True

    def _far_from_other_outputs(self, v: Vertex, a: int) -> bool:
        """Distance at least 3 from every other value's terminated set."""
        geo = self.geo
        for b in self.task.values:
            if b == a:
                continue
            for w in geo.terminated_with(b):
                if geo.stable_within_two(v, w, self.t):
                    return False
        return True

    def _admissible(self, v: Vertex, a: int) -> bool:
        return self._far_from_unseen_region(v, a) and self._far_from_other_outputs(v, a)

    # ------------------------------------------------------------------
    # step queries

    def step_query(self, conf: Configuration, pid: int) -> Configuration:
        self._require_registered(conf)
        s = conf.state(pid)
        if not s.active:
            raise NotActive(f"process {pid} is terminated")
        if s.stage is Stage.TO_UPDATE:
            result = apply_step(conf, pid, self.delta)
            self._register_child(conf, result, pid)
            self._record("step", {"config": conf.key(), "process": pid}, result.key())
            return result
        # A scan: build the state it produces and decide its fate.
        contents = conf.snapshot_contents(s.vertex.level + 1)
        vertex = derived_vertex(pid, contents.values())
        status = self.delta.status(vertex)
        if status is Status.UNDEFINED:
            if self.finalized:
                raise InternalInvariantError(
                    f"undecided state reached after commitment: {vertex!r}"
                )
            if vertex.level != self.t:
                raise InternalInvariantError(
                    f"undecided state below the frontier: {vertex!r}"
                )
            chosen = None
            for a in self.task.values:
                if self._admissible(vertex, a):
                    chosen = a
                    break
            if chosen is not None:
                if self.x_contains(vertex, chosen):
                    raise InternalInvariantError(
                        "distance conditions admitted a frozen state"
                    )
                self.geo.terminate(vertex, chosen)
            else:
                self._subdivide()
        result = apply_step(conf, pid, self.delta)
        self._register_child(conf, result, pid)
        self._record("step", {"config": conf.key(), "process": pid}, result.key())
        return result

    def _register_child(self, conf, child, pid):
        origin, sched = self.registered[conf]
        self.register(child, origin, sched + (pid,))

    def _subdivide(self):
        """Mark the whole frontier as continuing and advance the level."""
        self.t += 1
        self.subdivisions += 1

    # ------------------------------------------------------------------
    # output queries

    def output_query(self, conf: Configuration, qset: Iterable[int], value: int):
        self._require_registered(conf)
        qset = frozenset(qset)
        if not qset:
            raise NisError("output query needs a nonempty process set")
        for pid in qset:
            if not conf.state(pid).active:
                raise NotActive(f"process {pid} is terminated")
        if value not in self.task.values:
            raise NisError(f"value {value} outside the task alphabet")
        request = {
            "config": conf.key(),
            "processes": sorted(qset),
            "value": value,
        }
        sched = (
            self._output_query_final(conf, qset, value)
            if self.finalized
            else self._output_query_phase1(conf, qset, value)
        )
        self._record("output", request, list(sched) if sched is not None else None)
        return sched

    def _march_gap(self, conf, qset) -> int:
        """Rounds between the slowest active mover and the frontier."""
        lows = [
            conf.state(q).vertex.level
            for q in qset
            if conf.state(q).active
        ]
        return (self.t - min(lows)) if lows else 0

    def _explore_feasible(self, conf, qset) -> bool:
        gap = self._march_gap(conf, qset)
        movers = sum(1 for q in qset if conf.state(q).active)
        per_round = {0: 1, 1: 1, 2: 3, 3: 19}.get(movers, 19)
        est = per_round ** max(gap, 0)
        return est <= max(self.explore_budget // 8, 64)

    def reachable_frontier(self, conf: Configuration, qset: Iterable[int], budget=None):
        """Every frontier-or-terminated state the given processes can
        realize from here, with one breadth-first witness schedule each.

        Exploration touches only the objects up to the current level, so a
        witness never writes past the frontier.  Raises BudgetExceeded when
        the scope is too wide to enumerate.
        """
        self._require_registered(conf)
        qset = sorted(set(qset))
        _, frontier = explore(
            conf,
            qset,
            self._view(),
            self.t,
            budget=budget or self.explore_budget,
        )
        return frontier

    def _answer_terminated(self, conf, qset, value):
        view = self._view()
        for w in self.geo.terminated_with(value):
            if w.pid not in qset:
                continue
            sched = realizable(conf, qset, w, view, self.t)
            if sched is not None:
                return sched
        return None

    def _freeze(self, conf, qset, value, reason, explicit=None):
        self.frozen.append(
            FrozenQuery(conf, qset, value, reason, explicit, self.t)
        )
        return None

    def _subsumed(self, conf, qset, value) -> bool:
        origin, sched = self.registered[conf]
        for rec in self.frozen:
            if rec.value != value or not qset <= rec.qset:
                continue
            rorigin, rsched = self.registered.get(rec.conf, (None, None))
            if rorigin is None or rorigin != origin:
                if rec.conf == conf:
                    return True
                continue
            if (
                len(rsched) <= len(sched)
                and tuple(sched[: len(rsched)]) == tuple(rsched)
                and set(sched[len(rsched) :]) <= rec.qset
            ):
                return True
        return False

    def _output_query_phase1(self, conf, qset, value):
        sched = self._answer_terminated(conf, qset, value)
        if sched is not None:
            return sched
        if value not in reachable_seen_values(conf, qset, self.t, self.task.values):
            return self._freeze(conf, qset, value, "unseeable")
        if self._subsumed(conf, qset, value):
            return self._freeze(conf, qset, value, "subsumed")
        if not self._explore_feasible(conf, qset):
            return self._phase1_lazy(conf, qset, value)
        try:
            _, frontier = explore(
                conf, qset, self._view(), self.t, budget=self.explore_budget
            )
        except BudgetExceeded:
            return self._phase1_lazy(conf, qset, value)
        members = sorted(frontier, key=lambda v: v.key())
        free = [
            v
            for v in members
            if self.geo.is_active(v)
            and has_seen(v, value)
            and not self.x_contains(v, value)
        ]
        if not free:
            return self._freeze(
                conf, qset, value, "exhausted", frozenset(members)
            )
        tset = self.geo.terminated_with(value)
        for u in free:
            if any(self.geo.adjacent(u, w, self.t) for w in tset):
                return self._grant(u, frontier[u], value, case=1)
        for u in free:
            if not any(
                self.geo.adjacent(u, w, self.t) for w in self.geo.all_terminated()
            ):
                return self._grant(u, frontier[u], value, case=2)
        return self._freeze(conf, qset, value, "blocked", frozenset(free))

    def _phase1_lazy(self, conf, qset, value):
        pool = self._candidate_pool(conf, qset)
        free = [
            (v, sched)
            for v, sched, dead in pool
            if not dead
            and has_seen(v, value)
            and not self.x_contains(v, value)
        ]
        tset = self.geo.terminated_with(value)
        for v, sched in free:
            if any(self.geo.adjacent(v, w, self.t) for w in tset):
                return self._grant(v, sched, value, case=1)
        for w in tset:
            got = self._near_candidate(conf, qset, w)
            if got is not None:
                v, sched = got
                if (
                    self.geo.is_active(v)
                    and has_seen(v, value)
                    and not self.x_contains(v, value)
                ):
                    return self._grant(v, sched, value, case=1)
        for v, sched in free:
            if not any(
                self.geo.adjacent(v, w, self.t) for w in self.geo.all_terminated()
            ):
                return self._grant(v, sched, value, case=2)
        raise BudgetExceeded(
            "output query undecidable within search budgets at level "
            f"{self.t}"
        )

    def _candidate_pool(self, conf, qset):
        pool = []
        for cand in candidate_stream(conf, sorted(qset), self._view(), self.t):
            pool.append((cand.vertex, cand.schedule, cand.terminated))
            if len(pool) >= self.stream_limit:
                break
        return pool

    def _near_candidate(self, conf, qset, w):
        """A reachable frontier state adjacent to the given terminated one.

        Candidate marches for each mover: march alone, or follow the
        terminated state's recorded history up to some level and continue
        alone from there (the join level sweeps the whole history).  Every
        candidate is validated by the exact single-target check, so a
        returned state is always genuine; exhausting the family is the
        decision rule for concluding no adjacent state is reachable.
        """
        view = self._view()
        if w.scan is None:
            return None
        for pid in sorted(qset):
            if pid == w.pid:
                continue
            for tgt in self._join_targets(conf, pid, w):
                sched = realizable(conf, qset, tgt, view, self.t)
                if sched is None:
                    continue
                v, lift = self._lift_to_frontier(tgt, sched, conf, qset)
                if v is not None and self.geo.adjacent(v, w, self.t):
                    return v, lift
        return None

    def _join_targets(self, conf, pid, w):
        """Join-the-history candidates for one mover, deduplicated."""
        seen = set()
        out = []
        for rho in range(w.level, 0, -1):
            anc = w.ancestor(rho)
            if anc.scan is None:
                break
            slice_set = set(anc.scan)
            if any(u.pid == pid for u in slice_set):
                tgt = _try_vertex(pid, slice_set)
            else:
                own = self._solo_state_at(conf, pid, rho - 1)
                tgt = _try_vertex(pid, slice_set | {own}) if own is not None else None
            if tgt is not None and tgt not in seen:
                seen.add(tgt)
                out.append(tgt)
        solo = self._solo_state_at(conf, pid, w.level)
        if solo is not None and solo not in seen:
            out.append(solo)
        return out

    def _solo_state_at(self, conf, pid, level) -> Optional[Vertex]:
        """The process's state at a level if it marches alone from here."""
        s = conf.state(pid)
        if s.vertex.level >= level:
            return s.vertex.ancestor(level)
        if not s.active:
            return None
        c = conf
        view = self._view()
        while c.state(pid).active and c.state(pid).vertex.level < level:
            c = apply_step(c, pid, view)
        got = c.state(pid)
        return got.vertex if got.vertex.level == level else None

    def _lift_to_frontier(self, tgt, sched, conf, qset):
        """March the target's process solo up to the frontier level."""
        view = self._view()
        c = conf
        for pid in sched:
            c = apply_step(c, pid, view)
        pid = tgt.pid
        out = list(sched)
        while True:
            s = c.state(pid)
            if not s.active:
                return (s.vertex, tuple(out)) if s.vertex.level == self.t else (None, ())
            if s.vertex.level == self.t and s.stage is Stage.TO_UPDATE:
                return s.vertex, tuple(out)
            if s.stage is Stage.TO_UPDATE and s.vertex.level + 1 > self.t:
                return None, ()
            c = apply_step(c, pid, view)
            out.append(pid)

    def _grant(self, u: Vertex, witness: Schedule, value: int, case: int):
        """Terminate the one-step extension of the chosen state with the value."""
        self._subdivide()
        v = derived_vertex(u.pid, (u,))
        if self.delta.status(v) is not Status.UNDEFINED:
            raise InternalInvariantError("extension state already decided")
        if not self._far_from_unseen_region(v, value):
            raise InternalInvariantError(
                f"case {case} produced a state too close to the no-witness region"
            )
        for b in self.task.values:
            if b == value and case == 1:
                continue
            for w in self.geo.terminated_with(b):
                if self.geo.within_two(v, w, self.t):
                    raise InternalInvariantError(
                        f"case {case} produced a state within 2 of value {b}"
                    )
        if self.x_contains(v, value):
            raise InternalInvariantError("case construction hit a frozen state")
        self.geo.terminate(v, value)
        return tuple(witness) + (u.pid, u.pid)

    # ------------------------------------------------------------------
    # commitment and afterwards

    def finalize(self, alpha: Schedule, committed_origin: Configuration, b_set):
        if self.finalized:
            raise AlreadyFinalized()
        if not alpha:
            raise EmptyCommit()
        p = alpha[0]
        self.pivot_pid = p
        self.pivot_value = committed_origin.state(p).vertex.ancestor(0).value
        fan: Set[FrozenSet[Vertex]] = set()
        view = self._view()
        for c0 in b_set:
            for sched in one_round_schedules(c0):
                if sched and sched[0] != p:
                    continue
                c = c0
                for pid in sched:
                    c = apply_step(c, pid, view)
                fan.add(frozenset(s.vertex for s in c.states))
        self.fan_cliques = sorted(fan, key=lambda fs: sorted(v.key() for v in fs))
        self.closing_tsets = {
            a: tuple(self.geo.terminated_with(a)) for a in self.task.values
        }
        self._subdivide()
        self.finalized = True
        self._record(
            "finalize",
            {"alpha": list(alpha), "pivot": p, "pivotValue": self.pivot_value},
            {"fanCliques": len(self.fan_cliques)},
        )

    def in_committed_fan(self, v: Vertex) -> bool:
        """Whether a frontier state descends from the committed first-round fan."""
        hit = self._fan_memo.get(v)
        if hit is not None:
            return hit
        res = self._descends_to_fan(frozenset([v]), v.level)
        self._fan_memo[v] = res
        return res

    def _descends_to_fan(self, vs: FrozenSet[Vertex], r: int) -> bool:
        if r <= 1:
            return any(vs <= fc for fc in self.fan_cliques)
        nxt: Set[Vertex] = set()
        for v in vs:
            if v.level == r:
                if v.scan is None:
                    return False
                nxt.update(v.scan)
            else:
                nxt.add(v)
        return self._descends_to_fan(frozenset(nxt), r - 1)

    def closing_value(self, v: Vertex) -> int:
        """Output assigned to a committed-fan frontier state.

        A state adjacent to a pre-commitment terminated set keeps that
        value (there is at most one such value); everything else outputs
        the committed process's input.
        """
        hit = self._closing_memo.get(v)
        if hit is not None:
            return hit
        chosen = None
        for b in self.task.values:
            for w in self.closing_tsets[b]:
                if self.geo.adjacent(v, w, self.t):
                    if chosen is not None and chosen != b:
                        raise InternalInvariantError(
                            "closing rule found two adjacent values"
                        )
                    chosen = b
                    break
        if chosen is None:
            chosen = self.pivot_value
        self._closing_memo[v] = chosen
        return chosen

    def advance(self, conf: Configuration, pid: int) -> Configuration:
        """Pure protocol step (used to materialize committed-phase sets)."""
        return apply_step(conf, pid, self.delta)

    def _output_query_final(self, conf, qset, value):
        sched = self._answer_terminated(conf, qset, value)
        if sched is not None:
            return sched
        if value not in reachable_seen_values(conf, qset, self.t, self.task.values):
            return None
        if (
            value != self.pivot_value
            and not self.closing_tsets[value]
            and not self.geo.terminated_with(value)
        ):
            # Outputs of this value exist nowhere in the closed protocol.
            return None
        view = self._view()
        if self._explore_feasible(conf, qset):
            try:
                configs, frontier = explore(
                    conf, qset, view, self.t, budget=self.explore_budget
                )
                for v in sorted(frontier, key=lambda u: u.key()):
                    if self.delta.output(v) == value and v.pid in qset:
                        return frontier[v]
                return None
            except BudgetExceeded:
                pass
        for cand in self._final_candidates(conf, qset, value):
            v, sched = cand
            if v.pid in qset and self.delta.output(v) == value:
                return sched
        return None

    def _final_candidates(self, conf, qset, value):
        seen: Set[Vertex] = set()
        count = 0
        for cand in candidate_stream(conf, sorted(qset), self._view(), self.t):
            if cand.vertex not in seen:
                seen.add(cand.vertex)
                yield cand.vertex, cand.schedule
            count += 1
            if count >= self.stream_limit:
                break
        if value != self.pivot_value:
            for w in list(self.closing_tsets[value]) + self.geo.terminated_with(value):
                got = self._near_candidate(conf, qset, w)
                if got is not None and got[0] not in seen:
                    seen.add(got[0])
                    yield got

    # ------------------------------------------------------------------
    # invariants

    def audit(self):
        geo = self.geo
        t = self.t
        # Decided below the frontier, undecided-or-output at it.
        for v in geo.outputs:
            if v.level > t:
                raise InternalInvariantError("terminated state above the frontier")
        # Registered configurations: occurrence counts match state levels.
        # Once a configuration passes, later growth of t keeps it passing.
        for conf, (origin, sched) in self.registered.items():
            if conf in self._audited_configs:
                continue
            counts: Dict[int, int] = {}
            for pid in sched:
                counts[pid] = counts.get(pid, 0) + 1
            for pid in self.task.pids:
                c = counts.get(pid, 0)
                if c > 2 * t + 1:
                    raise InternalInvariantError("process stepped past the frontier")
                s = conf.state(pid)
                if s.vertex.level != c // 2:
                    raise InternalInvariantError("state level disagrees with steps")
                if c % 2 == 0 and s.active:
                    if self.delta.status(s.vertex) is Status.UNDEFINED:
                        raise InternalInvariantError(
                            "issued configuration holds an undecided state"
                        )
            self._audited_configs.add(conf)
        # Terminated sets: far from the no-witness regions and each other.
        # Subdividing the frontier only grows these distances, so facts
        # verified at an earlier level stay valid and are not re-derived.
        for a in self.task.values:
            for w in geo.terminated_with(a):
                key = ("tn", w, a)
                if key in self._verified_far:
                    continue
                if not has_seen(w, a):
                    raise InternalInvariantError("output of an unseen value")
                if geo.stable_unseen_neighbor(w, a, t):
                    raise InternalInvariantError(
                        f"terminated {a}-state borders its no-witness region"
                    )
                self._verified_far.add(key)
        vals = list(self.task.values)
        for i, a in enumerate(vals):
            for b in vals[i + 1 :]:
                for wa in geo.terminated_with(a):
                    for wb in geo.terminated_with(b):
                        key = ("tt", wa, wb) if wa.uid < wb.uid else ("tt", wb, wa)
                        if key in self._verified_far:
                            continue
                        if geo.stable_within_two(wa, wb, t):
                            raise InternalInvariantError(
                                f"terminated sets for {a} and {b} within distance 2"
                            )
                        self._verified_far.add(key)
        # Frozen states: in the no-witness region or beside another value.
        for rec in self.frozen:
            if rec.explicit is None or rec.level != t:
                continue
            for v in rec.explicit:
                if geo.in_unseen_region(v, rec.value):
                    continue
                out = geo.output_of(v)
                if out is not None and out != rec.value:
                    continue
                near = False
                for b in self.task.values:
                    if b == rec.value:
                        continue
                    for w in geo.terminated_with(b):
                        if v is w or geo.adjacent(v, w, t):
                            near = True
                            break
                    if near:
                        break
                if not near:
                    raise InternalInvariantError(
                        "frozen state neither unseen nor beside another value"
                    )


def _try_vertex(pid: int, scan: Set[Vertex]) -> Optional[Vertex]:
    try:
        return derived_vertex(pid, tuple(scan))
    except ValueError:
        return None
