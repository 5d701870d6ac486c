"""Dual-route checks: the structural oracle against materialized graphs."""

from random import Random

import pytest

from nisarena.core import TaskSpec
from nisarena.geometry import Geometry
from nisarena.levelgraph import (
    DeltaMap,
    initial_graph,
    set_distance,
    subdivide_graph,
    unseen_cliques,
)
from nisarena.states import has_seen


def make_world(task, levels, seed, p_term):
    """Materialized level graphs with a mirrored structural oracle."""
    rng = Random(seed)
    geo = Geometry(task)
    g = initial_graph(task)
    delta = DeltaMap({v: None for v in g.vertices})
    graphs = [g]
    for lvl in range(1, levels + 1):
        g = subdivide_graph(g, delta)
        graphs.append(g)
        frontier = sorted(
            (v for v in g.vertices if v.level == lvl and not delta.defined(v)),
            key=lambda v: v.key(),
        )
        for v in frontier:
            if rng.random() < p_term:
                val = rng.randrange(task.k + 1)
                delta.set_output(v, val)
                geo.terminate(v, val)
        for v in frontier:
            if not delta.defined(v):
                delta.set_continue(v)
    return graphs, delta, geo


WORLDS = [
    (2, 3, 0, 0.0),
    (2, 3, 1, 0.2),
    (2, 3, 2, 0.5),
    (3, 2, 0, 0.0),
    (3, 2, 1, 0.12),
    (3, 2, 2, 0.4),
    (3, 2, 3, 0.65),
]


@pytest.mark.parametrize("n,levels,seed,p_term", WORLDS)
def test_structural_oracle_matches_bfs(n, levels, seed, p_term):
    task = TaskSpec(n, 2)
    graphs, delta, geo = make_world(task, levels, seed, p_term)
    rng = Random(seed * 31 + 7)
    for r, g in enumerate(graphs):
        verts = sorted(g.vertices, key=lambda v: v.key())
        cliq_sets = [set(c.vertices) for c in g.cliques]
        adj = g.adjacency

        for _ in range(80):
            size = rng.randint(1, min(3, task.n))
            sample = set(rng.sample(verts, min(size, len(verts))))
            want = any(sample <= cs for cs in cliq_sets)
            assert geo.coexist(frozenset(sample), r) == want

        for _ in range(100):
            if len(verts) < 2:
                break
            x, y = rng.sample(verts, 2)
            assert geo.adjacent(x, y, r) == (y in adj[x])
            d = set_distance(g, [x], [y])
            assert geo.within_two(x, y, r) == (d is not None and d <= 2)

        for _ in range(60):
            c = rng.choice(list(g.cliques))
            sub = set(rng.sample(list(c.vertices), rng.randint(0, task.n - 1)))
            pid = rng.randint(1, task.n)
            avoid = frozenset(rng.sample(verts, min(len(verts), rng.randint(0, 2))))
            unseen = rng.choice([None] + list(task.values))
            want = any(
                sub <= set(cs.vertices)
                and geo.is_active(cs.member(pid))
                and cs.member(pid) not in avoid
                and (unseen is None or not has_seen(cs.member(pid), unseen))
                for cs in g.cliques
            )
            assert geo.slot_free(frozenset(sub), pid, r, avoid, unseen) == want

        for val in task.values:
            region = unseen_cliques(g, val).vertices
            for x in verts:
                assert geo.in_unseen_region(x, val) == (x in region)
            for _ in range(40):
                x = rng.choice(verts)
                if x.level == r and x.scan is not None and not has_seen(x, val):
                    continue  # callers handle the member-of-region case first
                want = any(not has_seen(u, val) for u in adj[x])
                assert geo.has_unseen_neighbor(x, val, r) == want


def test_rejects_large_n():
    with pytest.raises(ValueError):
        Geometry(TaskSpec(4, 2))


def test_lower_active_states_never_coexist_above():
    task = TaskSpec(2, 2)
    graphs, delta, geo = make_world(task, 2, 9, 0.0)
    base = next(iter(graphs[0].vertices))
    top = next(iter(v for v in graphs[2].vertices if v.level == 2))
    assert not geo.coexist(frozenset({base, top}), 2)
