import json

import pytest

from nisarena.adversary import Adversary
from nisarena.checker import (
    LEMMA_NAMES,
    audit_invariants,
    check_lemma,
    materialize_protocol,
    oracle_one_round,
    replay_transcript,
    run_lemma_suite,
)
from nisarena.core import TaskSpec, initial_configurations
from nisarena.harness import (
    Budgets,
    ChainProver,
    RandomProver,
    Session,
    run_strategy,
)
from nisarena.levelgraph import (
    clique_to_configuration,
    initial_graph,
    subdivide_clique,
)
from nisarena.states import DeltaMap


def test_oracle_one_round_counts():
    task = TaskSpec(2, 2)
    g = initial_graph(task)
    d = DeltaMap({v: None for v in g.vertices})
    c = sorted(g.cliques, key=lambda c: sorted(v.key() for v in c))[0]
    conf = clique_to_configuration(c, d)
    outcomes = oracle_one_round(conf, d)
    assert len(outcomes) == 3
    # all-terminated: single outcome
    d2 = DeltaMap()
    for v in c.vertices:
        d2.set_output(v, 0)
    for v in g.vertices:
        if not d2.defined(v):
            d2.set_continue(v)
    conf2 = clique_to_configuration(c, d2)
    assert oracle_one_round(conf2, d2) == {conf2}


def test_oracle_matches_subdivision_cliques():
    task = TaskSpec(3, 2)
    g = initial_graph(task)
    d = DeltaMap({v: None for v in g.vertices})
    c = sorted(g.cliques, key=lambda c: sorted(v.key() for v in c))[0]
    conf = clique_to_configuration(c, d)
    assert len(oracle_one_round(conf, d)) == len(subdivide_clique(c, d).cliques)


def test_literal_audit_on_live_run():
    task = TaskSpec(3, 2)
    adv = Adversary(task)
    run_strategy(ChainProver(), task, protocol=adv, budgets=Budgets(max_queries=80), seed=4)
    report = audit_invariants(adv)
    assert report.ok, report.summary()
    # materialized graphs agree with the protocol's level counter
    graphs = materialize_protocol(adv)
    assert len(graphs) == adv.t + 1


def test_literal_audit_catches_injected_fault():
    task = TaskSpec(3, 2)
    adv = Adversary(task, paranoid=False)
    run_strategy(ChainProver(), task, protocol=adv, budgets=Budgets(max_queries=40), seed=4)
    tset = adv.geo.all_terminated()
    assert tset
    w = tset[0]
    from nisarena.states import base_vertex, derived_vertex

    u = w.scan[0]
    other_pid = 2 if w.pid != 2 else 3
    companion = derived_vertex(
        other_pid,
        (base_vertex(other_pid, u.ancestor(0).value), u.ancestor(0))
        if u.level == 0
        else (base_vertex(other_pid, 0), u.ancestor(0)),
    )
    intruder = derived_vertex(other_pid, (u, companion))
    bad_value = next(b for b in task.values if b != adv.geo.output_of(w))
    adv.geo.terminate(intruder, bad_value)
    report = audit_invariants(adv)
    assert not report.ok


def test_replay_clean_then_tampered():
    task = TaskSpec(3, 2)
    adv = Adversary(task)
    rep = run_strategy(
        RandomProver(warmup=30), task, protocol=adv, budgets=Budgets(max_queries=120), seed=11
    )
    issues = replay_transcript(adv)
    assert issues == []
    # flip one recorded step response
    for event in adv.transcript:
        if event["kind"] == "step":
            event["response"] = "0" * 64
            break
    issues = replay_transcript(adv)
    assert issues and any("drifted" in i.detail for i in issues)


def test_lemma_suite_smoke():
    failures = run_lemma_suite(TaskSpec(3, 2), instances=3, seed=9)
    assert failures == []
    for name in LEMMA_NAMES:
        assert check_lemma(name, TaskSpec(2, 2), seed=17) is None
    with pytest.raises(ValueError):
        check_lemma("no-such-lemma", TaskSpec(2, 2), seed=0)
