import json

import pytest

from nisarena.adversary import Adversary
from nisarena.core import TaskSpec, check_task
from nisarena.harness import (
    Budgets,
    ChainProver,
    Commit,
    ExhaustiveProver,
    IllegalQuery,
    MockBadProtocol,
    NotReached,
    OutputQuery,
    RandomProver,
    ScriptedProver,
    Session,
    SessionStatus,
    StepQuery,
    ValencyProver,
    run_strategy,
)


def new_session(n=3, k=2):
    task = TaskSpec(n, k)
    adv = Adversary(task)
    return task, adv, Session(task, adv)


def test_initial_phase_state():
    task, adv, s = new_session()
    assert s.phase == 1
    assert len(s.a_set) == 27
    assert not s.a_prime
    assert s.status is SessionStatus.RUNNING
    assert not s.actions


def test_step_query_registers_and_prefixes():
    task, adv, s = new_session()
    conf = s.a_set[5]
    child = s.step_query(conf, 2)
    assert child in s.a_prime
    origin, sched = s.a_prime[child]
    assert origin is conf and sched == (2,)
    grand = s.step_query(child, 2)
    assert s.a_prime[grand][1] == (2, 2)
    # every nonempty prefix of a reached configuration is reached
    assert (origin.key(), (2,)) in s.by_provenance


def test_illegal_queries():
    task, adv, s = new_session()
    conf = s.a_set[0]
    other_task_conf = None
    with pytest.raises(IllegalQuery):
        s.step_query(conf, 9)
    child = s.step_query(conf, 1)
    import nisarena.core as core
    from nisarena.states import CompletedDelta

    foreign = core.apply_step(child, 3, CompletedDelta(adv.delta))
    with pytest.raises(IllegalQuery):
        s.step_query(foreign, 1)
    with pytest.raises(IllegalQuery):
        s.output_query(conf, (), 0)
    with pytest.raises(IllegalQuery):
        s.output_query(conf, (1,), 9)


def test_commit_counts_and_finalizes():
    task, adv, s = new_session()
    conf = s.a_set[14]
    c1 = s.step_query(conf, 1)
    c2 = s.step_query(c1, 1)
    s.commit(conf, (1, 1))
    assert s.phase == 2
    assert adv.finalized
    # one process appears in the schedule: (k+1)^(n-1) starting points
    assert len(s.b_set) == 9
    assert len(s.a_set) == 9
    assert not s.a_prime
    assert s.alpha == (1, 1)


def test_commit_requires_reached_extension():
    task, adv, s = new_session()
    conf = s.a_set[3]
    s.step_query(conf, 1)
    with pytest.raises(NotReached):
        s.commit(conf, (2,))
    with pytest.raises(IllegalQuery):
        s.commit(conf, ())


def test_output_query_does_not_extend_reached_set():
    task, adv, s = new_session()
    conf = s.a_set[14]
    before = dict(s.a_prime)
    sched = s.output_query(conf, (1, 2, 3), conf.state(1).vertex.value)
    assert sched is not None
    assert s.a_prime == before
    # the returned schedule can be walked via step queries
    cur = conf
    for pid in sched:
        cur = s.step_query(cur, pid)
    assert any(cur.state(p).output is not None for p in (1, 2, 3))


def test_full_game_to_loss():
    task = TaskSpec(3, 2)
    rep = run_strategy(
        ExhaustiveProver(depth=2), task, budgets=Budgets(max_queries=2000), seed=0
    )
    assert rep.status == "prover-loses"


def test_mock_protocol_is_beatable():
    task = TaskSpec(3, 2)
    rep = run_strategy(
        ValencyProver(),
        task,
        protocol=MockBadProtocol(task),
        budgets=Budgets(max_queries=500),
        seed=1,
    )
    assert rep.status == "prover-wins"
    assert rep.queries <= 500


def test_real_adversary_never_loses_to_mock_detector():
    task = TaskSpec(3, 2)
    rep = run_strategy(
        ValencyProver(), task, budgets=Budgets(max_queries=120), seed=1
    )
    assert rep.status in ("running", "prover-loses")


def test_random_runs_deterministic():
    task = TaskSpec(3, 2)
    adv1, adv2 = Adversary(task), Adversary(task)
    rep1 = run_strategy(
        RandomProver(warmup=40), task, protocol=adv1, budgets=Budgets(max_queries=150), seed=5
    )
    rep2 = run_strategy(
        RandomProver(warmup=40), task, protocol=adv2, budgets=Budgets(max_queries=150), seed=5
    )
    assert rep1.status == rep2.status and rep1.queries == rep2.queries
    t1 = [json.dumps(e, sort_keys=True) for e in adv1.transcript]
    t2 = [json.dumps(e, sort_keys=True) for e in adv2.transcript]
    assert t1 == t2


def test_scripted_replay_reproduces_transcript():
    task = TaskSpec(3, 2)
    adv1 = Adversary(task)
    s1 = Session(task, adv1)
    conf = s1.a_set[14]
    c = conf
    for pid in (1, 1, 2):
        c = s1.step_query(c, pid)
    s1.output_query(conf, (1, 2), 0)
    script = list(s1.actions)
    adv2 = Adversary(task)
    rep = run_strategy(
        ScriptedProver(script), task, protocol=adv2, budgets=Budgets(max_queries=100), seed=0
    )
    t1 = [json.dumps(e, sort_keys=True) for e in adv1.transcript]
    t2 = [json.dumps(e, sort_keys=True) for e in adv2.transcript]
    assert t1 == t2


def test_chain_prover_measures_terminations():
    task = TaskSpec(3, 2)
    rep = run_strategy(ChainProver(), task, budgets=Budgets(max_queries=300), seed=2)
    assert rep.status in ("running", "prover-loses")
    assert rep.chain_terminations > 0
    assert 0 < rep.chain_max <= 300
