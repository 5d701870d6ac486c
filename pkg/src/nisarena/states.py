"""Full-information process states and protocol maps.

A process state in the iterated-snapshot model is either its initial
(id, input) pair or the pair (id, scan contents) produced by its latest
scan.  Scan contents are sets of other processes' previous-level states,
so states are recursive terms.  They are hash-consed: two states are the
same object exactly when they are structurally equal, which makes level
graphs, delta maps and seen-value queries cheap.
"""

from __future__ import annotations

import hashlib
from enum import Enum
from typing import Iterable, Optional


class Vertex:
    """Interned full-information state.

    Base form: ``(pid, value)`` with level 0.
    Derived form: ``(pid, scan)`` where ``scan`` is the tuple of previous-level
    vertices the process observed, sorted by pid; its own previous state is
    always among them.  The level is the structural depth.
    """

    __slots__ = ("pid", "value", "scan", "level", "uid", "_digest")

    _intern: dict = {}
    _next_uid = 0

    def __init__(self, pid, value, scan, level, uid):
        self.pid = pid
        self.value = value
        self.scan = scan
        self.level = level
        self.uid = uid
        self._digest = None

    def __repr__(self):
        if self.scan is None:
            return f"({self.pid}:{self.value})"
        inner = ",".join(repr(v) for v in self.scan)
        return f"({self.pid}:[{inner}])"

    def __hash__(self):
        return self.uid

    def __eq__(self, other):
        return self is other

    def __lt__(self, other):
        return self.key() < other.key()

    @property
    def is_base(self) -> bool:
        return self.scan is None

    def key(self) -> str:
        """Canonical lowercase-hex digest of the state term."""
        if self._digest is None:
            if self.scan is None:
                text = f"b:{self.pid}:{self.value}"
            else:
                text = f"d:{self.pid}:" + ",".join(v.key() for v in self.scan)
            self._digest = hashlib.sha256(text.encode()).hexdigest()
        return self._digest

    def own_predecessor(self) -> Optional["Vertex"]:
        """The process's own previous-level state (None for base states)."""
        if self.scan is None:
            return None
        for v in self.scan:
            if v.pid == self.pid:
                return v
        raise AssertionError("derived state missing its own component")

    def ancestor(self, level: int) -> "Vertex":
        """The process's state at an earlier level of its own history."""
        v = self
        while v.level > level:
            v = v.own_predecessor()
        if v.level != level:
            raise ValueError(f"state has no ancestor at level {level}")
        return v

    def scan_ids(self) -> frozenset:
        return frozenset(v.pid for v in self.scan)


def base_vertex(pid: int, value: int) -> Vertex:
    key = (pid, value)
    v = Vertex._intern.get(key)
    if v is None:
        v = Vertex(pid, value, None, 0, Vertex._next_uid)
        Vertex._next_uid += 1
        Vertex._intern[key] = v
    return v


def derived_vertex(pid: int, scan: Iterable[Vertex]) -> Vertex:
    scan = tuple(sorted(scan, key=lambda v: v.pid))
    if not scan:
        raise ValueError("scan contents may not be empty")
    levels = {v.level for v in scan}
    if len(levels) != 1:
        raise ValueError("scan members must share a level")
    pids = [v.pid for v in scan]
    if len(set(pids)) != len(pids):
        raise ValueError("scan members must have distinct pids")
    if pid not in pids:
        raise ValueError("a process updates before it scans")
    key = (pid, scan)
    v = Vertex._intern.get(key)
    if v is None:
        v = Vertex(pid, None, scan, scan[0].level + 1, Vertex._next_uid)
        Vertex._next_uid += 1
        Vertex._intern[key] = v
    return v


_seen_cache: dict = {}


def has_seen(v: Vertex, value: int) -> bool:
    """Whether the state's history contains a process with the given input."""
    key = (v.uid, value)
    hit = _seen_cache.get(key)
    if hit is not None:
        return hit
    if v.scan is None:
        res = v.value == value
    else:
        res = any(has_seen(u, value) for u in v.scan)
    _seen_cache[key] = res
    return res


class Status(Enum):
    """Protocol decision at a state: keep going, output, or not yet chosen."""

    CONTINUE = "continue"
    OUTPUT = "output"
    UNDEFINED = "undefined"


class DeltaMap:
    """Partial map from states to CONTINUE or OUTPUT(value).

    Missing states are UNDEFINED.  Used directly for the explicit, small
    graphs; the adaptive protocol wraps one with a level rule.
    """

    def __init__(self, mapping=None):
        # vertex -> None (continue) or output value
        self._map = dict(mapping) if mapping else {}

    def status(self, v: Vertex) -> Status:
        if v not in self._map:
            return Status.UNDEFINED
        return Status.CONTINUE if self._map[v] is None else Status.OUTPUT

    def output(self, v: Vertex) -> Optional[int]:
        val = self._map.get(v)
        return val

    def set_continue(self, v: Vertex) -> None:
        self._map[v] = None

    def set_output(self, v: Vertex, value: int) -> None:
        prior = self._map.get(v, "absent")
        if prior not in ("absent", value):
            raise ValueError("protocol decisions are write-once")
        self._map[v] = value

    def defined(self, v: Vertex) -> bool:
        return v in self._map

    def items(self):
        return self._map.items()

    def copy(self) -> "DeltaMap":
        return DeltaMap(self._map)


def continue_everywhere(vertices: Iterable[Vertex]) -> DeltaMap:
    return DeltaMap({v: None for v in vertices})


class CompletedDelta:
    """View of a delta map that treats undecided states as CONTINUE.

    Used by oracles that run schedules past the decided frontier without
    committing the underlying map.
    """

    def __init__(self, base):
        self._base = base

    def status(self, v: Vertex) -> Status:
        st = self._base.status(v)
        return Status.CONTINUE if st is Status.UNDEFINED else st

    def output(self, v: Vertex):
        return self._base.output(v)

    def defined(self, v: Vertex) -> bool:
        return True
