from itertools import product

import pytest

from nisarena.core import TaskSpec, apply_schedule, one_round_schedules
from nisarena.levelgraph import (
    CapExceeded,
    Caps,
    Clique,
    LevelGraph,
    clique_to_configuration,
    configuration_to_clique,
    correspondence_check,
    initial_graph,
    is_connected,
    set_distance,
    subdivide_clique,
    subdivide_graph,
    subdivision_sets,
    terminated_set,
    to_dot,
    to_json,
    unseen_cliques,
)
from nisarena.states import CompletedDelta, DeltaMap, Status, base_vertex


def g0(n, k=2):
    return initial_graph(TaskSpec(n, k))


def continue_delta(graph):
    return DeltaMap({v: None for v in graph.vertices})


def test_initial_graph_shapes():
    g = g0(2)
    assert len(g.vertices) == 6 and len(g.cliques) == 9 and len(g.edges()) == 9
    g3 = g0(3)
    assert len(g3.vertices) == 9 and len(g3.cliques) == 27 and len(g3.edges()) == 27
    assert is_connected(g) and is_connected(g3)


def some_clique(graph):
    return sorted(graph.cliques, key=lambda c: sorted(v.key() for v in c))[0]


def status_patterns(n):
    """Continue or a small choice of outputs per member."""
    opts = [None, 0, 1]
    return product(opts, repeat=n)


def delta_for(clique, pattern, graph):
    d = continue_delta(graph)
    d2 = DeltaMap()
    for v, p in zip(clique.vertices, pattern):
        if p is None:
            d2.set_continue(v)
        else:
            d2.set_output(v, p)
    for v in graph.vertices:
        if not d2.defined(v):
            d2.set_continue(v)
    return d2


def test_subdivision_two_processes_path():
    g = g0(2)
    c = some_clique(g)
    frag = subdivide_clique(c, continue_delta(g))
    assert len(frag.vertices) == 4
    assert len(frag.edges()) == 3
    assert len(frag.cliques) == 3
    ends = [v for v in frag.vertices if len(v.scan) == 1]
    assert set_distance(frag, [ends[0]], [ends[1]]) == 3


def test_subdivision_counts_three_processes():
    g = g0(3)
    c = some_clique(g)
    frag = subdivide_clique(c, continue_delta(g))
    assert len(frag.vertices) == 12
    conf = clique_to_configuration(c, continue_delta(g))
    outcomes = {
        apply_schedule(conf, s, CompletedDelta(continue_delta(g)))
        for s in one_round_schedules(conf)
    }
    assert len(frag.cliques) == len(outcomes)


def test_subdivision_all_terminated_is_identity():
    g = g0(2)
    c = some_clique(g)
    d = delta_for(c, (0, 0), g)
    frag = subdivide_clique(c, d)
    assert frag.cliques == frozenset([c])


def test_subdivision_one_terminated():
    g = g0(2)
    c = some_clique(g)
    d = delta_for(c, (0, None), g)
    frag = subdivide_clique(c, d)
    assert len(frag.vertices) == 2 and len(frag.edges()) == 1


def test_bullet_sets_match_cliques_exhaustively():
    for n in (2, 3):
        g = g0(n)
        c = some_clique(g)
        for pattern in status_patterns(n):
            d = delta_for(c, pattern, g)
            frag = subdivide_clique(c, d)
            vs, es = subdivision_sets(c, d)
            assert vs == set(frag.vertices)
            assert es == frag.edges()


def test_correspondence_exhaustive_small():
    for n in (2, 3):
        g = g0(n)
        c = some_clique(g)
        for pattern in status_patterns(n):
            ok, detail = correspondence_check(c, delta_for(c, pattern, g))
            assert ok, f"n={n} pattern={pattern}: {detail}"


def test_clique_configuration_roundtrip():
    g = g0(3)
    c = some_clique(g)
    d = delta_for(c, (None, 1, None), g)
    conf = clique_to_configuration(c, d)
    assert not conf.state(2).active and conf.state(2).output == 1
    assert configuration_to_clique(conf) == c


def test_unseen_cliques_initial():
    g = g0(2)
    region = unseen_cliques(g, 0)
    assert len(region.cliques) == 4  # both inputs drawn from {1, 2}
    assert all(
        all(v.value != 0 for v in c.vertices) for c in region.cliques
    )
    g3 = subdivide_graph(g0(2), continue_delta(g0(2)))
    # a graph where every state saw the value yields an empty region
    seen_all = LevelGraph(
        0, [c for c in g.cliques if any(v.value == 0 for v in c.vertices)]
    )
    assert not unseen_cliques(seen_all, 0).cliques


def test_subdivide_graph_merges_shared_states():
    g = g0(2)
    g1 = subdivide_graph(g, continue_delta(g))
    assert g1.level == 1
    assert len(g1.cliques) == 27
    assert len(g1.vertices) == 24
    assert is_connected(g1)


def test_caps_raise():
    g = g0(3)
    with pytest.raises(CapExceeded):
        subdivide_graph(g, continue_delta(g), Caps(max_level=0))
    with pytest.raises(CapExceeded):
        subdivide_graph(g, continue_delta(g), Caps(max_cliques=10))


def test_disconnected_union():
    g = g0(2)
    cs = sorted(g.cliques, key=lambda c: sorted(v.key() for v in c))
    # two cliques sharing no vertex: inputs (0,0) and (1,1)
    a = next(c for c in cs if all(v.value == 0 for v in c.vertices))
    b = next(c for c in cs if all(v.value == 1 for v in c.vertices))
    assert not is_connected(LevelGraph(0, [a, b]))


def test_exports_are_byte_stable():
    g = g0(2)
    d = continue_delta(g)
    assert to_json(g, d) == to_json(LevelGraph(0, set(g.cliques)), d)
    dot = to_dot(g, d)
    assert dot == to_dot(g, d)
    assert dot.startswith("graph level {")
    j = to_json(g, d)
    assert '"level":0' in j


def test_terminated_set_extraction():
    g = g0(2)
    c = some_clique(g)
    d = delta_for(c, (0, None), g)
    tset = terminated_set(g, d, 0)
    assert tset == frozenset([c.vertices[0]])
