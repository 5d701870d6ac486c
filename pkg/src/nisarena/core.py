"""Operational semantics of the non-uniform iterated snapshot model.

Shared memory is an unbounded sequence of single-writer snapshot objects,
each accessed at most twice per process: one update writing the process's
current state, then one scan whose result becomes the new state.  Because
states are full-information, a configuration is determined by the process
states alone; snapshot contents are reconstructed on demand.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import Iterable, Optional, Sequence, Tuple

from .states import DeltaMap, Status, Vertex, base_vertex, derived_vertex

Schedule = Tuple[int, ...]


class NisError(Exception):
    """Base class for model-level errors."""


class NotActive(NisError):
    pass


class UndefinedProtocol(NisError):
    """A scan landed on a state the protocol has not decided yet."""

    def __init__(self, vertex):
        super().__init__(f"protocol undefined at {vertex!r}")
        self.vertex = vertex


class MixedRounds(NisError):
    pass


class PreconditionViolated(NisError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    """Set agreement instance: n processes, at most k distinct outputs.

    k = 1 (consensus) is rejected outright; the adaptive protocol needs at
    least three candidate values.  n <= k makes the task trivially solvable
    but the machinery still runs.
    """

    n: int
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need k >= 2, got k={self.k}")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")

    @property
    def values(self) -> range:
        return range(self.k + 1)

    @property
    def pids(self) -> range:
        return range(1, self.n + 1)


class Stage(Enum):
    TO_UPDATE = 0   # latest scan done (or initial); next step writes
    TO_SCAN = 1     # wrote its state; next step scans
    DONE = 2


@dataclass(frozen=True)
class ProcessState:
    vertex: Vertex
    stage: Stage
    output: Optional[int] = None

    @property
    def active(self) -> bool:
        return self.stage is not Stage.DONE

    def poised_object(self) -> Optional[int]:
        """Index of the snapshot object the next step touches (1-based)."""
        if self.stage is Stage.DONE:
            return None
        return self.vertex.level + 1


class Configuration:
    """Immutable global state: one ProcessState per process, pid order."""

    __slots__ = ("states", "_ident", "_key")

    def __init__(self, states: Sequence[ProcessState]):
        self.states = tuple(states)
        self._ident = tuple(
            (s.vertex.uid, s.stage.value, s.output) for s in self.states
        )
        self._key = None

    @property
    def n(self) -> int:
        return len(self.states)

    def key(self) -> str:
        """Canonical lowercase-hex digest (wire format); computed lazily."""
        if self._key is None:
            text = "|".join(
                f"{s.vertex.key()}:{s.stage.value}:{s.output}" for s in self.states
            )
            self._key = hashlib.sha256(text.encode()).hexdigest()
        return self._key

    def __hash__(self):
        return hash(self._ident)

    def __eq__(self, other):
        return isinstance(other, Configuration) and self._ident == other._ident

    def __repr__(self):
        return f"Configuration<{self._key[:12]}>"

    def state(self, pid: int) -> ProcessState:
        return self.states[pid - 1]

    def active_pids(self) -> Tuple[int, ...]:
        return tuple(s.vertex.pid for s in self.states if s.active)

    def is_final(self) -> bool:
        return not any(s.active for s in self.states)

    def inputs(self) -> Tuple[int, ...]:
        return tuple(s.vertex.ancestor(0).value for s in self.states)

    def outputs(self) -> Tuple[Optional[int], ...]:
        return tuple(s.output for s in self.states)

    def has_updated(self, pid: int, obj: int) -> bool:
        """Whether the process has written its component of snapshot object obj."""
        s = self.state(pid)
        if s.vertex.level >= obj:
            return True
        return s.active and s.stage is Stage.TO_SCAN and s.vertex.level == obj - 1

    def snapshot_contents(self, obj: int) -> dict:
        """pid -> state written to the object; absent components are missing."""
        out = {}
        for s in self.states:
            pid = s.vertex.pid
            if self.has_updated(pid, obj):
                out[pid] = s.vertex.ancestor(obj - 1)
        return out


def initial_configuration(inputs: Sequence[int]) -> Configuration:
    return Configuration(
        [
            ProcessState(base_vertex(pid, x), Stage.TO_UPDATE)
            for pid, x in enumerate(inputs, start=1)
        ]
    )


def initial_configurations(task: TaskSpec):
    """All (k+1)^n initial configurations, in lexicographic input order."""
    def rec(prefix):
        if len(prefix) == task.n:
            yield initial_configuration(prefix)
            return
        for x in task.values:
            yield from rec(prefix + [x])

    return list(rec([]))


def apply_step(conf: Configuration, pid: int, delta: DeltaMap) -> Configuration:
    """One step of the given process under the protocol map."""
    s = conf.state(pid)
    if not s.active:
        raise NotActive(f"process {pid} is terminated")
    states = list(conf.states)
    if s.stage is Stage.TO_UPDATE:
        states[pid - 1] = ProcessState(s.vertex, Stage.TO_SCAN)
        return Configuration(states)
    # Scan of the object this process last wrote.
    obj = s.vertex.level + 1
    contents = conf.snapshot_contents(obj)
    vertex = derived_vertex(pid, contents.values())
    status = delta.status(vertex)
    if status is Status.UNDEFINED:
        raise UndefinedProtocol(vertex)
    if status is Status.CONTINUE:
        states[pid - 1] = ProcessState(vertex, Stage.TO_UPDATE)
    else:
        states[pid - 1] = ProcessState(vertex, Stage.DONE, delta.output(vertex))
    return Configuration(states)


def apply_schedule(conf: Configuration, sched: Sequence[int], delta: DeltaMap) -> Configuration:
    for pos, pid in enumerate(sched):
        try:
            conf = apply_step(conf, pid, delta)
        except NisError as exc:
            exc.position = pos
            raise
    return conf


def round_aligned(conf: Configuration) -> int:
    """Level shared by all active processes poised to write, or raise."""
    levels = set()
    for s in conf.states:
        if not s.active:
            continue
        if s.stage is not Stage.TO_UPDATE:
            raise MixedRounds("a process is mid-round")
        levels.add(s.vertex.level)
    if len(levels) > 1:
        raise MixedRounds(f"active processes at levels {sorted(levels)}")
    return levels.pop() if levels else -1


def one_round_schedules(conf: Configuration):
    """All schedules with exactly two steps per active process.

    The first occurrence of a process is its write and the second its scan,
    so every permutation of the two-of-each multiset qualifies.
    """
    round_aligned(conf)
    active = conf.active_pids()
    if not active:
        return [()]
    pool = tuple(sorted(active)) * 2
    return sorted(set(permutations(sorted(pool))))


def _keep_first(sched: Sequence[int], limit: int) -> Tuple[int, ...]:
    seen: dict = {}
    out = []
    for pid in sched:
        c = seen.get(pid, 0)
        if c < limit:
            out.append(pid)
            seen[pid] = c + 1
    return tuple(out)


def _drop_first(sched: Sequence[int], limit: int) -> Tuple[int, ...]:
    seen: dict = {}
    out = []
    for pid in sched:
        c = seen.get(pid, 0)
        seen[pid] = c + 1
        if c >= limit:
            out.append(pid)
    return tuple(out)


def truncate_and_pad(
    sched: Sequence[int],
    conf: Configuration,
    rounds: int,
    observers: Iterable[int],
    delta: DeltaMap,
) -> Schedule:
    """Compress a schedule to a round-by-round one indistinguishable to observers.

    The observers must each be poised `rounds` full rounds past the starting
    configuration (or terminated on the way) after the original schedule runs.
    """
    base = round_aligned(conf)
    end = apply_schedule(conf, sched, delta)
    for pid in observers:
        s = end.state(pid)
        if s.active and not (
            s.stage is Stage.TO_UPDATE and s.vertex.level == base + rounds
        ):
            raise PreconditionViolated(f"process {pid} not at round boundary")
    gamma = _keep_first(sched, 2 * rounds)

    def pad(gamma_part: Tuple[int, ...], r: int) -> Tuple[int, ...]:
        if r == 0:
            return ()
        head = _keep_first(gamma_part, 2 * (r - 1))
        beta_prefix = pad(head, r - 1)
        tail = _drop_first(gamma_part, 2 * (r - 1))
        mid = apply_schedule(conf, beta_prefix, delta)
        counts: dict = {}
        for pid in tail:
            counts[pid] = counts.get(pid, 0) + 1
        out = list(tail)
        for pid in sorted(mid.active_pids()):
            out.extend([pid] * (2 - counts.get(pid, 0)))
        return beta_prefix + tuple(out)

    return pad(gamma, rounds)


class Verdict(Enum):
    OK = "ok"
    VIOLATES_VALIDITY = "violates-validity"
    VIOLATES_AGREEMENT = "violates-agreement"


@dataclass(frozen=True)
class TaskCheck:
    verdict: Verdict
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is Verdict.OK


def check_task(conf: Configuration, task: TaskSpec) -> TaskCheck:
    """Validity and agreement over the terminated processes of a configuration."""
    inputs = set(conf.inputs())
    outputs = [o for o in conf.outputs() if o is not None]
    for o in outputs:
        if o not in inputs:
            return TaskCheck(Verdict.VIOLATES_VALIDITY, f"output {o} not an input")
    if len(set(outputs)) > task.k:
        return TaskCheck(
            Verdict.VIOLATES_AGREEMENT,
            f"{len(set(outputs))} distinct outputs {sorted(set(outputs))}",
        )
    return TaskCheck(Verdict.OK)
