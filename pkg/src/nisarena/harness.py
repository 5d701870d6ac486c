"""Prover-versus-protocol sessions and the built-in prover zoo.

A session tracks the interaction's phases: the committed schedule, the
set of starting configurations it induces, the configurations reached by
queries this phase, and the adjudicated status.  The prover wins by
reaching a configuration whose outputs break the task; it loses when all
configurations of a committed phase are final and correct.  Budgets stand
in for the unbounded interactions of the underlying game: running out is
reported as inconclusive, never as a win.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from random import Random
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .adversary import Adversary
from .core import (
    Configuration,
    Schedule,
    TaskSpec,
    apply_step,
    check_task,
    initial_configurations,
)
from .reach import BudgetExceeded, explore
from .states import Status


class IllegalQuery(Exception):
    """The prover referenced an unknown configuration or inactive process."""


class NotReached(Exception):
    """Commit target was never reached during this phase."""


class SessionStatus(Enum):
    RUNNING = "running"
    PROVER_WINS = "prover-wins"
    PROVER_LOSES = "prover-loses"


@dataclass(frozen=True)
class StepQuery:
    conf: Configuration
    pid: int


@dataclass(frozen=True)
class OutputQuery:
    conf: Configuration
    qset: Tuple[int, ...]
    value: int


@dataclass(frozen=True)
class Commit:
    conf: Configuration
    suffix: Schedule


@dataclass(frozen=True)
class Concede:
    reason: str = ""


class Session:
    """One prover-protocol interaction."""

    def __init__(self, task: TaskSpec, protocol):
        self.task = task
        self.protocol = protocol
        self.phase = 1
        self.alpha: Schedule = ()
        initials = initial_configurations(task)
        self.b_set: List[Configuration] = list(initials)
        self.a_set: List[Configuration] = list(initials)
        # Provenance is phase-scoped: the same configuration may be reached
        # again in a later phase along a different schedule.
        self.a_set_prov: Dict[Configuration, Tuple[Configuration, Schedule]] = {
            c: (c, ()) for c in initials
        }
        self.a_prime: Dict[Configuration, Tuple[Configuration, Schedule]] = {}
        self.by_provenance: Dict[Tuple[str, Schedule], Configuration] = {
            (c.key(), ()): c for c in initials
        }
        self.status = SessionStatus.RUNNING
        self.win_reason = ""
        self.queries = 0
        self.actions: List[dict] = []
        for c in initials:
            protocol.register(c, c, ())

    # ------------------------------------------------------------------

    def provenance_of(self, conf: Configuration) -> Tuple[Configuration, Schedule]:
        got = self.a_prime.get(conf)
        if got is None:
            got = self.a_set_prov.get(conf)
        if got is None:
            raise IllegalQuery("configuration was never issued this phase")
        return got

    def known(self, conf: Configuration) -> bool:
        return conf in self.a_prime or conf in self.a_set_prov

    def reachable_configs(self) -> List[Configuration]:
        seen = []
        for c in self.a_set:
            seen.append(c)
        seen.extend(self.a_prime)
        return seen

    # ------------------------------------------------------------------

    def step_query(self, conf: Configuration, pid: int) -> Configuration:
        if self.status is not SessionStatus.RUNNING:
            raise IllegalQuery("session is over")
        if not self.known(conf):
            raise IllegalQuery("configuration was never issued")
        if pid < 1 or pid > self.task.n or not conf.state(pid).active:
            raise IllegalQuery(f"process {pid} is not active here")
        origin, sched = self.provenance_of(conf)
        child = self.protocol.step_query(conf, pid)
        if child not in self.a_prime and child not in self.a_set_prov:
            self.a_prime[child] = (origin, sched + (pid,))
            self.by_provenance[(origin.key(), sched + (pid,))] = child
        self.queries += 1
        self.actions.append(
            {"kind": "step", "config": conf.key(), "process": pid, "result": child.key()}
        )
        verdict = check_task(child, self.task)
        if not verdict.ok:
            self.status = SessionStatus.PROVER_WINS
            self.win_reason = verdict.detail or verdict.verdict.value
        return child

    def output_query(
        self, conf: Configuration, qset: Iterable[int], value: int
    ) -> Optional[Schedule]:
        if self.status is not SessionStatus.RUNNING:
            raise IllegalQuery("session is over")
        if not self.known(conf):
            raise IllegalQuery("configuration was never issued")
        qset = tuple(sorted(set(qset)))
        if not qset:
            raise IllegalQuery("empty process set")
        for pid in qset:
            if not conf.state(pid).active:
                raise IllegalQuery(f"process {pid} is not active here")
        if value not in self.task.values:
            raise IllegalQuery(f"value {value} outside the alphabet")
        sched = self.protocol.output_query(conf, qset, value)
        self.queries += 1
        self.actions.append(
            {
                "kind": "output",
                "config": conf.key(),
                "processes": list(qset),
                "value": value,
                "result": list(sched) if sched is not None else None,
            }
        )
        return sched

    def commit(self, conf: Configuration, suffix: Schedule):
        if self.status is not SessionStatus.RUNNING:
            raise IllegalQuery("session is over")
        if not suffix:
            raise IllegalQuery("commit needs a nonempty schedule")
        if conf not in self.a_set_prov:
            raise IllegalQuery("commit must start from a current-phase configuration")
        origin, base = self.a_set_prov[conf]
        target_sched = base + tuple(suffix)
        target = self.by_provenance.get((origin.key(), target_sched))
        if target is None or target not in self.a_prime:
            raise NotReached("the committed extension was never reached")
        new_alpha = self.alpha + tuple(suffix)
        free = [p for p in self.task.pids if p not in set(new_alpha)]
        new_b: List[Configuration] = []
        base_inputs = list(origin.inputs())

        def build(idx, inputs):
            if idx == len(free):
                from .core import initial_configuration

                new_b.append(initial_configuration(inputs))
                return
            for x in self.task.values:
                nxt = list(inputs)
                nxt[free[idx] - 1] = x
                build(idx + 1, nxt)

        build(0, base_inputs)
        if not getattr(self.protocol, "finalized", True):
            self.protocol.finalize(new_alpha, origin, new_b)
        new_a: List[Configuration] = []
        new_prov: Dict[Configuration, Tuple[Configuration, Schedule]] = {}
        for c0 in new_b:
            c = c0
            self.protocol.register(c0, c0, ())
            for pid in new_alpha:
                c = self.protocol.advance(c, pid)
            self.protocol.register(c, c0, new_alpha)
            new_a.append(c)
            new_prov[c] = (c0, new_alpha)
        self.phase += 1
        self.alpha = new_alpha
        self.b_set = new_b
        self.a_set = new_a
        self.a_set_prov = new_prov
        self.a_prime = {}
        self.by_provenance = {
            (c0.key(), sched): c for c, (c0, sched) in new_prov.items()
        }
        self.actions.append(
            {
                "kind": "commit",
                "config": conf.key(),
                "suffix": list(suffix),
                "phase": self.phase,
            }
        )
        if all(c.is_final() and check_task(c, self.task).ok for c in new_a):
            self.status = SessionStatus.PROVER_LOSES

    def perform(self, action):
        if isinstance(action, StepQuery):
            return self.step_query(action.conf, action.pid)
        if isinstance(action, OutputQuery):
            return self.output_query(action.conf, action.qset, action.value)
        if isinstance(action, Commit):
            return self.commit(action.conf, action.suffix)
        if isinstance(action, Concede):
            return None
        raise TypeError(f"unknown action {action!r}")


# ----------------------------------------------------------------------
# the mock broken protocol (adjudicator non-vacuity)


class MockBadProtocol:
    """Fixed protocol that terminates everyone after one round with its
    own identifier as output, breaking agreement (and usually validity)."""

    def __init__(self, task: TaskSpec):
        self.task = task
        self.finalized = True
        self.transcript: List[dict] = []
        self.t = 1

    def _delta(self):
        outer = self

        class _D:
            def status(self, v):
                if v.level == 0:
                    return Status.CONTINUE
                return Status.OUTPUT

            def output(self, v):
                return (v.pid - 1) % (outer.task.k + 1) if v.level >= 1 else None

            def defined(self, v):
                return True

        return _D()

    def register(self, conf, origin, sched):
        pass

    def step_query(self, conf, pid):
        return apply_step(conf, pid, self._delta())

    def advance(self, conf, pid):
        return apply_step(conf, pid, self._delta())

    def finalize(self, alpha, origin, b_set):
        pass

    def output_query(self, conf, qset, value):
        _, frontier = explore(conf, qset, self._delta(), 1, budget=100000)
        for v in sorted(frontier, key=lambda u: u.key()):
            d = self._delta()
            if d.status(v) is Status.OUTPUT and d.output(v) == value:
                return frontier[v]
        return None


# ----------------------------------------------------------------------
# budgets, reports, runner


@dataclass
class Budgets:
    max_queries: int = 1000
    max_phases: int = 64
    max_chain: int = 10000


@dataclass
class Report:
    status: str
    queries: int
    phases: int
    final_level: int
    wall_time: float
    win_reason: str = ""
    budget_hits: int = 0
    chain_max: int = 0
    chain_terminations: int = 0
    digests: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def run_strategy(strategy, task: TaskSpec, protocol=None, budgets=None, seed: int = 0) -> Report:
    budgets = budgets or Budgets()
    protocol = protocol if protocol is not None else Adversary(task)
    session = Session(task, protocol)
    rng = Random(seed)
    t0 = time.monotonic()
    budget_hits = 0
    while (
        session.status is SessionStatus.RUNNING
        and session.queries < budgets.max_queries
        and session.phase <= budgets.max_phases
    ):
        action = strategy.next_action(session, rng)
        if action is None or isinstance(action, Concede):
            break
        try:
            result = session.perform(action)
        except BudgetExceeded:
            budget_hits += 1
            result = None
            if hasattr(strategy, "budget_hit"):
                strategy.budget_hit(action)
        if hasattr(strategy, "observe"):
            strategy.observe(session, action, result)
    report = Report(
        status=session.status.value,
        queries=session.queries,
        phases=session.phase,
        final_level=getattr(protocol, "t", 0),
        wall_time=round(time.monotonic() - t0, 3),
        win_reason=session.win_reason,
        budget_hits=budget_hits,
        chain_max=getattr(strategy, "chain_max", 0),
        chain_terminations=getattr(strategy, "chain_terminations", 0),
        digests=[e["invariantDigest"] for e in getattr(protocol, "transcript", [])][-5:],
    )
    return report


# ----------------------------------------------------------------------
# the prover zoo


class RandomProver:
    """Uniform legal actions over a seeded mix of kinds.

    Commits are deferred until a warm-up query count so that a campaign
    spends most of its budget stressing the first phase.
    """

    def __init__(self, step_weight=7, output_weight=2, commit_weight=1, warmup=200):
        self.weights = (step_weight, output_weight, commit_weight)
        self.warmup = warmup

    def next_action(self, session: Session, rng: Random):
        commit_w = self.weights[2] if session.queries >= self.warmup else 0
        kinds = ["step"] * self.weights[0] + ["output"] * self.weights[1] + [
            "commit"
        ] * commit_w
        for _ in range(8):
            kind = rng.choice(kinds)
            configs = session.reachable_configs()
            live = [c for c in configs if c.active_pids()]
            if kind == "step" and live:
                conf = live[rng.randrange(len(live))]
                pid = rng.choice(conf.active_pids())
                return StepQuery(conf, pid)
            if kind == "output" and live:
                conf = live[rng.randrange(len(live))]
                act = conf.active_pids()
                size = rng.randint(1, len(act))
                qset = tuple(sorted(rng.sample(act, size)))
                return OutputQuery(conf, qset, rng.randrange(session.task.k + 1))
            if kind == "commit" and session.a_prime:
                cands = list(session.a_prime)
                conf2 = cands[rng.randrange(len(cands))]
                origin, sched = session.a_prime[conf2]
                suffix = sched[len(session.alpha) :]
                if not suffix:
                    continue
                base = session.by_provenance.get((origin.key(), tuple(session.alpha)))
                if base is None or base not in session.a_set_prov:
                    continue
                return Commit(base, suffix)
        return Concede("no legal action found")


class ChainProver:
    """Drives one chain of step queries at a time until it fully terminates."""

    def __init__(self):
        self.current: Optional[Configuration] = None
        self.chain_len = 0
        self.since_term = 0
        self.chain_max = 0
        self.chain_terminations = 0
        self.initial_idx = 0

    def next_action(self, session: Session, rng: Random):
        if self.current is None or not self.current.active_pids():
            pool = session.a_set
            if not pool:
                return Concede("no starting configurations")
            self.current = pool[self.initial_idx % len(pool)]
            self.initial_idx += 1
            self.chain_len = 0
            self.since_term = 0
            if not self.current.active_pids():
                return Concede("all starting configurations final")
        pids = self.current.active_pids()
        pid = pids[self.chain_len % len(pids)]
        return StepQuery(self.current, pid)

    def observe(self, session, action, result):
        if result is None:
            return
        before = action.conf
        alive_before = len(before.active_pids())
        alive_after = len(result.active_pids())
        self.chain_len += 1
        self.since_term += 1
        self.chain_max = max(self.chain_max, self.since_term)
        if alive_after < alive_before:
            self.chain_terminations += 1
            self.since_term = 0
        self.current = result


class ValencyProver:
    """Asks which values remain possible, then walks toward disagreement."""

    def __init__(self):
        self.current: Optional[Configuration] = None
        self.stage = 0
        self.pending_values: List[int] = []
        self.initial_idx = 0
        self.rotate = 0

    def next_action(self, session: Session, rng: Random):
        if self.current is None or not self.current.active_pids():
            pool = session.a_set
            live = [c for c in pool if c.active_pids()]
            if not live:
                return Concede("everything final")
            self.current = live[self.initial_idx % len(live)]
            self.initial_idx += 1
            self.pending_values = list(session.task.values)
        if self.pending_values:
            y = self.pending_values.pop(0)
            return OutputQuery(self.current, self.current.active_pids(), y)
        pids = self.current.active_pids()
        pid = pids[self.rotate % len(pids)]
        self.rotate += 1
        self.pending_values = []
        return StepQuery(self.current, pid)

    def observe(self, session, action, result):
        if isinstance(action, StepQuery) and result is not None:
            self.current = result
            self.pending_values = list(session.task.values)


class ExhaustiveProver:
    """Breadth-first over configurations to a depth, then commits and
    finishes by driving one committed branch to a final configuration."""

    def __init__(self, depth: int = 2):
        self.depth = depth
        self.queue: List[Tuple[Configuration, int]] = []
        self.enqueued: Set[str] = set()
        self.committed_once = False
        self.finishing: Optional[Configuration] = None

    def next_action(self, session: Session, rng: Random):
        if session.phase == 1 and not self.committed_once:
            if not self.queue and not self.enqueued:
                for c in session.a_set:
                    self.queue.append((c, 0))
                    self.enqueued.add(c.key())
            while self.queue:
                conf, d = self.queue[0]
                if d >= self.depth or not conf.active_pids():
                    self.queue.pop(0)
                    continue
                for pid in conf.active_pids():
                    key = conf.key() + f":{pid}"
                    if key not in self.enqueued:
                        self.enqueued.add(key)
                        return StepQuery(conf, pid)
                self.queue.pop(0)
            # depth exhausted: commit the lexicographically first extension
            for conf in sorted(session.a_prime, key=lambda c: c.key()):
                origin, sched = session.a_prime[conf]
                suffix = sched[len(session.alpha) :]
                if suffix:
                    base = session.by_provenance.get(
                        (origin.key(), tuple(session.alpha))
                    )
                    if base is not None and base in session.a_set_prov:
                        self.committed_once = True
                        return Commit(base, suffix)
            return Concede("nothing to commit")
        # later phases: drive one branch to a final configuration, commit it
        if self.finishing is None or self.finishing not in session.a_prime:
            live = [c for c in session.a_set if c.active_pids()]
            if not live:
                return Concede("phase already final")
            self.finishing = live[0]
        conf = self.finishing
        pids = conf.active_pids()
        if pids:
            return StepQuery(conf, pids[0])
        origin, sched = session.a_prime.get(conf, session.a_set_prov.get(conf, (None, ())))
        suffix = sched[len(session.alpha) :]
        base = session.by_provenance.get((origin.key(), tuple(session.alpha))) if origin else None
        if suffix and base is not None:
            self.finishing = None
            return Commit(base, suffix)
        return Concede("finished branch was not committable")

    def observe(self, session, action, result):
        if isinstance(action, StepQuery) and result is not None:
            if session.phase == 1 and not self.committed_once:
                if result.key() not in self.enqueued:
                    _, sched = session.a_prime.get(result, (None, ()))
                    depth = len(sched) - len(session.alpha)
                    self.queue.append((result, depth))
                    self.enqueued.add(result.key())
            else:
                self.finishing = result
        if isinstance(action, Commit):
            self.finishing = None


class ScriptedProver:
    """Replays a list of recorded actions; supports a finish directive that
    drives the current phase to a final configuration and commits it."""

    def __init__(self, script: Sequence[dict]):
        self.script = list(script)
        self.pos = 0
        self.finishing: Optional[Configuration] = None
        self.by_key: Dict[str, Configuration] = {}

    def _conf(self, session, key):
        for c in session.reachable_configs():
            if c.key() == key:
                return c
        raise IllegalQuery(f"script references unknown configuration {key[:12]}")

    def next_action(self, session: Session, rng: Random):
        if self.finishing is not None or (
            self.pos < len(self.script)
            and self.script[self.pos].get("kind") == "finish"
        ):
            if self.finishing is None:
                live = [c for c in session.a_set if c.active_pids()]
                if not live:
                    self.pos += 1
                    if session.status is not SessionStatus.RUNNING:
                        return Concede("done")
                    return Concede("nothing to finish")
                self.finishing = live[0]
            conf = self.finishing
            pids = conf.active_pids()
            if pids:
                return StepQuery(conf, pids[0])
            origin, sched = session.a_prime.get(conf, session.a_set_prov.get(conf, (None, ())))
            suffix = sched[len(session.alpha) :]
            base = (
                session.by_provenance.get((origin.key(), tuple(session.alpha)))
                if origin
                else None
            )
            self.finishing = None
            self.pos += 1
            if suffix and base is not None:
                return Commit(base, suffix)
            return Concede("unfinishable")
        if self.pos >= len(self.script):
            return Concede("script exhausted")
        entry = self.script[self.pos]
        self.pos += 1
        kind = entry["kind"]
        if kind == "step":
            return StepQuery(self._conf(session, entry["config"]), entry["process"])
        if kind == "output":
            return OutputQuery(
                self._conf(session, entry["config"]),
                tuple(entry["processes"]),
                entry["value"],
            )
        if kind == "commit":
            return Commit(self._conf(session, entry["config"]), tuple(entry["suffix"]))
        raise ValueError(f"unknown scripted action kind {kind!r}")

    def observe(self, session, action, result):
        if isinstance(action, StepQuery) and result is not None and self.finishing is not None:
            self.finishing = result


STRATEGIES = {
    "random": RandomProver,
    "chain": ChainProver,
    "valency": ValencyProver,
    "exhaustive": ExhaustiveProver,
}
