"""Reachability tools versus exhaustive exploration."""

from random import Random

import pytest

from nisarena.core import Stage, TaskSpec, apply_step, initial_configurations
from nisarena.reach import (
    BudgetExceeded,
    candidate_stream,
    explore,
    reachable_seen_values,
    realizable,
)
from nisarena.states import CompletedDelta, base_vertex, derived_vertex, has_seen
from tests.test_geometry import make_world


def random_config(task, view, cap, rng, max_steps):
    conf = rng.choice(initial_configurations(task))
    for _ in range(rng.randint(0, max_steps)):
        opts = [
            p
            for p in task.pids
            if conf.state(p).active
            and not (
                conf.state(p).stage is Stage.TO_UPDATE
                and conf.state(p).vertex.level + 1 > cap
            )
        ]
        if not opts:
            break
        conf = apply_step(conf, rng.choice(opts), view)
    return conf


CASES = [(2, 3, 1, 0.2), (3, 2, 2, 0.0), (3, 2, 3, 0.3)]


@pytest.mark.parametrize("n,levels,seed,p_term", CASES)
def test_realizable_matches_exploration(n, levels, seed, p_term):
    task = TaskSpec(n, 2)
    graphs, delta, geo = make_world(task, levels, seed, p_term)
    view = CompletedDelta(delta)
    rng = Random(seed * 13 + 1)
    for _ in range(8):
        conf = random_config(task, view, levels, rng, 4 * levels)
        qset = sorted(rng.sample(list(task.pids), rng.randint(1, task.n)))
        configs, frontier = explore(conf, qset, view, levels, budget=400000)
        universe = set(frontier)
        other = random_config(task, view, levels, rng, 4 * levels)
        _, oth = explore(other, list(task.pids), view, levels, budget=400000)
        universe |= set(oth)
        for v in sorted(universe, key=lambda u: u.key()):
            sched = realizable(conf, qset, v, view, levels)
            assert (sched is not None) == (v in frontier)
            if sched is not None:
                c = conf
                for pid in sched:
                    c = apply_step(c, pid, view)
                assert c.state(v.pid).vertex is v
        for cand in candidate_stream(conf, qset, view, levels):
            assert cand.vertex in frontier
        exact = {
            a
            for a in task.values
            if any(has_seen(v, a) for v in frontier)
        }
        assert exact == reachable_seen_values(conf, qset, levels, task.values)


def test_realizable_rejects_cross_history_targets():
    """A term mixing incompatible histories is not a universe state."""
    task = TaskSpec(3, 2)
    conf = initial_configurations(task)[0]  # all inputs 0

    class _AllCont:
        def status(self, v):
            from nisarena.states import Status

            return Status.CONTINUE

        def output(self, v):
            return None

    view = _AllCont()
    # p2 sees p3 with input 2; p3's own chain has input 0: inconsistent.
    fake_p3 = base_vertex(3, 2)
    p2_view = derived_vertex(2, (base_vertex(2, 0), fake_p3))
    p3_own = derived_vertex(3, (base_vertex(3, 0),))
    target = derived_vertex(3, (p2_view, p3_own))
    assert realizable(conf, [1, 2, 3], target, view, 2) is None


def test_explore_budget():
    task = TaskSpec(3, 2)
    graphs, delta, geo = make_world(task, 2, 1, 0.0)
    conf = initial_configurations(task)[0]
    with pytest.raises(BudgetExceeded):
        explore(conf, [1, 2, 3], CompletedDelta(delta), 2, budget=5)


def test_frozen_processes_do_not_move():
    task = TaskSpec(3, 2)
    graphs, delta, geo = make_world(task, 1, 4, 0.0)
    view = CompletedDelta(delta)
    conf = initial_configurations(task)[0]
    configs, frontier = explore(conf, [1], view, 1)
    for c in configs:
        assert c.state(2) == conf.state(2)
        assert c.state(3) == conf.state(3)
    assert all(v.pid == 1 for v in frontier)
