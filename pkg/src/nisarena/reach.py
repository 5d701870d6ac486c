"""Reachability within a fixed set of moving processes.

Answering an output query means reasoning about the configurations
reachable from a given one when only the queried processes take steps,
each stopping once it has scanned the current frontier object.  Three
tools serve that:

  * exhaustive breadth-first exploration with a node budget, for small
    gaps between the configuration and the frontier;
  * an exact realizability check: whether a specific state is the state
    of its process in some reachable configuration, with a witness
    schedule, decided from the state's own history (full information
    makes the entire required behavior of every process explicit);
  * a deterministic candidate stream of frontier states reachable by
    canonical marching patterns, for when exploration is too wide.

Callers supply a total protocol view (undecided states read as
continuing); simulation respects real terminations along the way.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .core import Configuration, Schedule, Stage, apply_step
from .states import Status, Vertex


class BudgetExceeded(Exception):
    """An exhaustive search hit its node budget before completing."""


def _step_targets(conf: Configuration, moving, cap_level: int) -> List[int]:
    out = []
    for pid in moving:
        s = conf.state(pid)
        if not s.active:
            continue
        if s.stage is Stage.TO_UPDATE and s.vertex.level + 1 > cap_level:
            continue
        out.append(pid)
    return sorted(out)


def explore(
    conf: Configuration,
    moving: Iterable[int],
    delta,
    cap_level: int,
    budget: int = 20000,
):
    """All configurations reachable by moving-only schedules up to the cap.

    Returns (configs, frontier): configs maps each reached configuration
    to its first (breadth-first, lexicographically least) schedule;
    frontier maps each realized frontier-or-terminated state of a moving
    process to one witness schedule.
    """
    moving = sorted(set(moving))
    configs: Dict[Configuration, Schedule] = {conf: ()}
    frontier: Dict[Vertex, Schedule] = {}

    def harvest(c: Configuration, sched: Schedule):
        for pid in moving:
            s = c.state(pid)
            if (s.vertex.level == cap_level or not s.active) and s.vertex not in frontier:
                frontier[s.vertex] = sched

    harvest(conf, ())
    queue: List[Configuration] = [conf]
    while queue:
        nxt: List[Configuration] = []
        for c in queue:
            base = configs[c]
            for pid in _step_targets(c, moving, cap_level):
                child = apply_step(c, pid, delta)
                if child in configs:
                    continue
                if len(configs) >= budget:
                    raise BudgetExceeded(f"exploration budget {budget} reached")
                sched = base + (pid,)
                configs[child] = sched
                harvest(child, sched)
                nxt.append(child)
        queue = nxt
    return configs, frontier


# ----------------------------------------------------------------------
# seen-value closure


def reachable_seen_values(conf: Configuration, moving, cap_level: int, values) -> Set[int]:
    """Values some moving process could have seen by the frontier level.

    A marching process observes the other movers' current histories and
    every component already written at levels it still scans; nothing
    else ever becomes visible under moving-only schedules.
    """
    from .states import has_seen

    moving = set(moving)
    sources: List[Vertex] = []
    active_levels = [
        conf.state(q).vertex.level
        for q in moving
        if conf.state(q).active and conf.state(q).vertex.level < cap_level
    ]
    low = min(active_levels) if active_levels else None
    for q in moving:
        sources.append(conf.state(q).vertex)
    if low is not None:
        for o in range(1, conf.n + 1):
            s = conf.state(o)
            top = s.vertex.level
            if s.active and s.stage is Stage.TO_SCAN:
                top += 1
            vis = min(top, cap_level)
            if vis >= low + 1:
                sources.append(s.vertex.ancestor(vis - 1))
    return {a for a in values if any(has_seen(v, a) for v in sources)}


# ----------------------------------------------------------------------
# exact realizability of one target state


def _closure(v: Vertex) -> List[Vertex]:
    out: List[Vertex] = []
    seen: Set[int] = set()
    stack = [v]
    while stack:
        u = stack.pop()
        if u.uid in seen:
            continue
        seen.add(u.uid)
        out.append(u)
        if u.scan is not None:
            stack.extend(u.scan)
    return out


def realizable(
    conf: Configuration,
    moving: Iterable[int],
    target: Vertex,
    delta,
    cap_level: int,
) -> Optional[Schedule]:
    """Witness schedule after which the target is its process's state, or None.

    The target's full-information history pins down every required action
    of every process: each process's contribution is the ancestor chain of
    the highest of its states observed anywhere in the history, so the
    check is pure consistency against the starting configuration and the
    protocol decisions, followed by a canonical level-major emission.
    """
    moving = set(moving)
    n = conf.n
    if target.pid not in moving:
        return None
    if conf.state(target.pid).vertex is target:
        return ()
    if target.level > cap_level or target.level <= conf.state(target.pid).vertex.level:
        return None

    closure = _closure(target)
    tops: Dict[int, Vertex] = {target.pid: target}
    per_pid: Dict[int, List[Vertex]] = {target.pid: [target]}
    for v in closure:
        if v.scan is None:
            continue
        for u in v.scan:
            per_pid.setdefault(u.pid, []).append(u)
            best = tops.get(u.pid)
            if best is None or u.level > best.level:
                tops[u.pid] = u
    # Every observed state of a process must lie on one history chain;
    # synthetic targets mixing incompatible histories are not states of
    # the universe at all.
    for pid, states in per_pid.items():
        top = tops[pid]
        for u in states:
            if top.ancestor(u.level) is not u:
                return None

    # Processes whose top observed state is itself written to the next
    # object somewhere in the history.
    writes_past_top: Set[int] = set()
    for v in closure:
        if v.scan is None:
            continue
        for u in v.scan:
            if u is tops.get(u.pid) and v.level == u.level + 1:
                writes_past_top.add(u.pid)
    if target.pid in writes_past_top:
        return None

    for pid, top in sorted(tops.items()):
        s = conf.state(pid)
        cl = s.vertex.level
        if top.level < cl:
            if s.vertex.ancestor(top.level) is not top:
                return None
            continue
        if top.level == cl:
            if s.vertex is not top:
                return None
            # Already there; a required write past it must either have
            # happened or still be possible.
            if pid in writes_past_top and not conf.has_updated(pid, cl + 1):
                if pid not in moving or not s.active:
                    return None
                if delta.status(top) is Status.OUTPUT or cl + 1 > cap_level:
                    return None
            continue
        # The process must march.
        if pid not in moving or not s.active:
            return None
        if top.ancestor(cl) is not s.vertex:
            return None
        lvl = cl
        while lvl < top.level:
            if delta.status(top.ancestor(lvl)) is Status.OUTPUT:
                return None
            lvl += 1
        if pid in writes_past_top:
            if delta.status(top) is Status.OUTPUT or top.level + 1 > cap_level:
                return None

    # Presence and absence constraints per newly performed scan.
    new_views: Dict[int, List[Vertex]] = {}
    for v in closure:
        if v.scan is None:
            continue
        if v.level <= conf.state(v.pid).vertex.level:
            if conf.state(v.pid).vertex.ancestor(v.level) is not v:
                return None
            continue
        new_views.setdefault(v.level, []).append(v)
        present = {u.pid for u in v.scan}
        for o in range(1, n + 1):
            if o in present:
                if not conf.has_updated(o, v.level) and o not in moving:
                    return None
            else:
                if conf.has_updated(o, v.level):
                    return None
    for obj, views in new_views.items():
        sets = [set(v.scan) for v in views]
        for i in range(len(sets)):
            for j in range(i + 1, len(sets)):
                if not (sets[i] <= sets[j] or sets[j] <= sets[i]):
                    return None

    # ------------------------------------------------------------------
    # canonical level-major witness emission
    schedule: List[int] = []
    emitted_scan: Dict[int, int] = {}
    extra_writes: Dict[int, List[int]] = {}
    for pid, top in sorted(tops.items()):
        if pid in writes_past_top and not conf.has_updated(pid, top.level + 1):
            extra_writes.setdefault(top.level + 1, []).append(pid)
    for obj in sorted(set(new_views) | set(extra_writes)):
        views = sorted(new_views.get(obj, []), key=lambda v: (len(v.scan), v.key()))
        written: Set[int] = {o for o in range(1, n + 1) if conf.has_updated(o, obj)}
        for v in views:
            for pid in sorted(u.pid for u in v.scan if u.pid not in written):
                schedule.append(pid)
                written.add(pid)
            for pid in sorted(
                w.pid
                for w in views
                if w.scan == v.scan and emitted_scan.get(w.pid) != obj
            ):
                schedule.append(pid)
                emitted_scan[pid] = obj
        for pid in sorted(extra_writes.get(obj, [])):
            if pid not in written:
                schedule.append(pid)
                written.add(pid)

    # The constraints make the emission exact; simulation guards the code.
    from .states import CompletedDelta

    c = conf
    view = CompletedDelta(delta)
    for pid in schedule:
        if pid not in moving:
            raise AssertionError("witness would move a frozen process")
        c = apply_step(c, pid, view)
    if c.state(target.pid).vertex is not target:
        raise AssertionError("witness emission disagrees with constraints")
    return tuple(schedule)


# ----------------------------------------------------------------------
# deterministic marching candidates


@dataclass(frozen=True)
class Candidate:
    vertex: Vertex
    schedule: Schedule
    terminated: bool


def _lockstep_round(conf: Configuration, group: Sequence[int], delta, cap_level: int):
    """One aligned round: all updates in pid order, then all scans."""
    sched: List[int] = []
    c = conf
    ready = [
        pid
        for pid in group
        if c.state(pid).active
        and (
            c.state(pid).stage is Stage.TO_SCAN
            or c.state(pid).vertex.level + 1 <= cap_level
        )
    ]
    for pid in ready:
        if c.state(pid).stage is Stage.TO_UPDATE:
            c = apply_step(c, pid, delta)
            sched.append(pid)
    for pid in ready:
        s = c.state(pid)
        if s.active and s.stage is Stage.TO_SCAN:
            c = apply_step(c, pid, delta)
            sched.append(pid)
    return c, tuple(sched)


def _round_interleavings(conf: Configuration, group: Sequence[int], delta, cap_level: int):
    """All distinct one-round interleavings of the group from an aligned spot."""
    movers = [
        pid
        for pid in group
        if conf.state(pid).active
        and conf.state(pid).stage is Stage.TO_UPDATE
        and conf.state(pid).vertex.level + 1 <= cap_level
    ]
    if not movers:
        return
    pool = tuple(sorted(movers)) * 2
    seen: Set[Tuple[int, ...]] = set()
    for order in permutations(pool):
        if order in seen:
            continue
        seen.add(order)
        c = conf
        ok = True
        for pid in order:
            if not c.state(pid).active:
                ok = False
                break
            c = apply_step(c, pid, delta)
        if ok:
            yield c, order


def candidate_stream(conf: Configuration, moving: Sequence[int], delta, cap_level: int):
    """Frontier states reachable by canonical marching patterns.

    Every nonempty subset of the movers marches in lockstep rounds; the
    final round before the cap is additionally enumerated over all of the
    subset's interleavings.  Deterministic; a heuristic generator (the
    exhaustive and single-target tools are the exact ones).
    """
    moving = sorted(set(moving))
    emitted: Set[Vertex] = set()

    def finish(c: Configuration, sched: Schedule):
        for pid in moving:
            s = c.state(pid)
            if (s.vertex.level == cap_level or not s.active) and s.vertex not in emitted:
                emitted.add(s.vertex)
                yield Candidate(s.vertex, sched, not s.active)

    for size in range(1, len(moving) + 1):
        for group in combinations(moving, size):
            c, sched = conf, ()
            while True:
                done = all(
                    (not c.state(p).active)
                    or (
                        c.state(p).stage is Stage.TO_UPDATE
                        and c.state(p).vertex.level >= cap_level
                    )
                    for p in group
                )
                if done:
                    yield from finish(c, sched)
                    break
                at_last_round = all(
                    (not c.state(p).active)
                    or c.state(p).vertex.level
                    + (0 if c.state(p).stage is Stage.TO_UPDATE else 1)
                    >= cap_level
                    for p in group
                )
                if at_last_round and all(
                    c.state(p).stage is Stage.TO_UPDATE
                    for p in group
                    if c.state(p).active
                ):
                    for c2, part in _round_interleavings(c, group, delta, cap_level):
                        yield from finish(c2, sched + part)
                    break
                c2, part = _lockstep_round(c, group, delta, cap_level)
                if not part:
                    yield from finish(c, sched)
                    break
                c, sched = c2, sched + part
