"""HTTP front end: sessions as resources, queries as POSTs.

Stable JSON API consumed by the browser client.  Configuration keys are
the canonical state-vector digests; vertex keys are lowercase hex digests
of states.  One lock per session serializes its operations; distinct
sessions run independently.
"""

from __future__ import annotations

import json
import threading
import uuid
from typing import Dict, List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .adversary import Adversary
from .core import Configuration, TaskSpec
from .harness import IllegalQuery, NotReached, Session
from .levelgraph import CapExceeded, Caps, to_json
from .reach import BudgetExceeded
from .states import has_seen


class SessionBox:
    def __init__(self, task: TaskSpec):
        self.task = task
        self.adversary = Adversary(task, paranoid=False)
        self.session = Session(task, self.adversary)
        self.lock = threading.Lock()
        self.by_key: Dict[str, Configuration] = {}
        self.refresh_keys()

    def refresh_keys(self):
        for c in self.session.reachable_configs():
            self.by_key.setdefault(c.key(), c)

    def conf(self, key: str) -> Configuration:
        c = self.by_key.get(key)
        if c is None:
            raise HTTPException(404, f"unknown configuration {key[:16]}")
        return c


class NewSession(BaseModel):
    n: int
    k: int


class StepBody(BaseModel):
    configKey: str
    process: int


class OutputBody(BaseModel):
    configKey: str
    processes: List[int]
    value: int


class CommitBody(BaseModel):
    configKey: str
    schedule: List[int]


def config_payload(conf: Configuration) -> dict:
    states = []
    for s in conf.states:
        states.append(
            {
                "pid": s.vertex.pid,
                "level": s.vertex.level,
                "stage": s.stage.name.lower(),
                "active": s.active,
                "output": s.output,
                "input": s.vertex.ancestor(0).value,
                "vertexKey": s.vertex.key(),
            }
        )
    return {"configKey": conf.key(), "states": states}


def create_app(static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="set-agreement arena")
    boxes: Dict[str, SessionBox] = {}

    def box_of(sid: str) -> SessionBox:
        box = boxes.get(sid)
        if box is None:
            raise HTTPException(404, "unknown session id")
        return box

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def new_session(body: NewSession):
        try:
            task = TaskSpec(body.n, body.k)
            box = SessionBox(task)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        sid = uuid.uuid4().hex[:12]
        boxes[sid] = box
        return {"sessionId": sid, "n": body.n, "k": body.k}

    @app.get("/sessions/{sid}")
    def summary(sid: str):
        box = box_of(sid)
        with box.lock:
            s = box.session
            adv = box.adversary
            return {
                "sessionId": sid,
                "n": box.task.n,
                "k": box.task.k,
                "phase": s.phase,
                "alpha": list(s.alpha),
                "status": s.status.value,
                "winReason": s.win_reason,
                "queries": s.queries,
                "level": adv.t,
                "finalized": adv.finalized,
                "aSet": [config_payload(c) for c in s.a_set],
                "aPrime": [
                    dict(config_payload(c), provenance=list(prov[1]))
                    for c, prov in s.a_prime.items()
                ],
                "terminated": {
                    str(a): [v.key() for v in adv.geo.terminated_with(a)]
                    for a in box.task.values
                },
            }

    @app.post("/sessions/{sid}/query")
    def step(sid: str, body: StepBody):
        box = box_of(sid)
        with box.lock:
            conf = box.conf(body.configKey)
            try:
                child = box.session.step_query(conf, body.process)
            except IllegalQuery as exc:
                raise HTTPException(409, str(exc))
            box.refresh_keys()
            payload = config_payload(child)
            payload["status"] = box.session.status.value
            return payload

    @app.post("/sessions/{sid}/output-query")
    def output(sid: str, body: OutputBody):
        box = box_of(sid)
        with box.lock:
            conf = box.conf(body.configKey)
            try:
                sched = box.session.output_query(conf, body.processes, body.value)
            except IllegalQuery as exc:
                raise HTTPException(409, str(exc))
            except BudgetExceeded as exc:
                raise HTTPException(503, f"search budget exhausted: {exc}")
            return {"schedule": list(sched) if sched is not None else None}

    @app.post("/sessions/{sid}/commit")
    def commit(sid: str, body: CommitBody):
        box = box_of(sid)
        with box.lock:
            conf = box.conf(body.configKey)
            try:
                box.session.commit(conf, tuple(body.schedule))
            except (IllegalQuery, NotReached) as exc:
                raise HTTPException(409, str(exc))
            box.refresh_keys()
            s = box.session
            return {
                "phase": s.phase,
                "alpha": list(s.alpha),
                "status": s.status.value,
                "aSet": [c.key() for c in s.a_set],
            }

    @app.get("/sessions/{sid}/graph")
    def graph(sid: str, level: int = 0):
        box = box_of(sid)
        with box.lock:
            if level < 0 or level > box.adversary.t:
                raise HTTPException(422, f"level must be within 0..{box.adversary.t}")
            from .checker import materialize_protocol

            try:
                graphs = materialize_protocol(
                    box.adversary, Caps(max_level=6, max_cliques=30000), up_to=level
                )
            except CapExceeded as exc:
                raise HTTPException(409, f"graph too large to materialize: {exc}")
            if level >= len(graphs):
                raise HTTPException(422, "level not materialized")
            g = graphs[level]
            payload = json.loads(to_json(g, box.adversary.delta))
            for entry in payload["vertices"]:
                v = next(u for u in g.vertices if u.key() == entry["key"])
                entry["seen"] = [a for a in box.task.values if has_seen(v, a)]
            return payload

    @app.get("/sessions/{sid}/transcript", response_class=PlainTextResponse)
    def transcript(sid: str):
        box = box_of(sid)
        with box.lock:
            return "\n".join(
                json.dumps(e, sort_keys=True) for e in box.adversary.transcript
            )

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
