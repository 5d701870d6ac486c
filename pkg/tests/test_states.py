import pytest

from nisarena.states import (
    DeltaMap,
    Status,
    base_vertex,
    derived_vertex,
    has_seen,
)


def test_interning_identity():
    a = base_vertex(1, 0)
    b = base_vertex(1, 0)
    assert a is b
    c = derived_vertex(1, (a,))
    d = derived_vertex(1, (base_vertex(1, 0),))
    assert c is d
    assert c.level == 1
    assert c is not derived_vertex(1, (c,))


def test_scan_ordering_and_own_component():
    u1, u2 = base_vertex(1, 0), base_vertex(2, 1)
    v = derived_vertex(2, (u2, u1))
    assert [w.pid for w in v.scan] == [1, 2]
    assert v.own_predecessor() is u2
    assert v.ancestor(0) is u2


def test_derived_rejects_malformed_scans():
    u1, u2 = base_vertex(1, 0), base_vertex(2, 1)
    with pytest.raises(ValueError):
        derived_vertex(3, (u1, u2))  # no own component
    with pytest.raises(ValueError):
        derived_vertex(1, ())
    with pytest.raises(ValueError):
        derived_vertex(1, (u1, derived_vertex(2, (u2,))))  # mixed levels
    with pytest.raises(ValueError):
        derived_vertex(1, (u1, base_vertex(1, 2)))  # duplicate pid


def test_has_seen_base_and_recursive():
    a = base_vertex(1, 0)
    assert has_seen(a, 0) and not has_seen(a, 1)
    b = base_vertex(2, 1)
    v = derived_vertex(1, (a, b))
    assert has_seen(v, 1) and has_seen(v, 0) and not has_seen(v, 2)
    solo = derived_vertex(1, (a,))
    assert not has_seen(solo, 1)


def test_keys_are_stable_hex():
    v = derived_vertex(1, (base_vertex(1, 0), base_vertex(2, 1)))
    assert v.key() == v.key()
    assert len(v.key()) == 64
    assert all(ch in "0123456789abcdef" for ch in v.key())


def test_delta_write_once():
    d = DeltaMap()
    v = base_vertex(1, 0)
    assert d.status(v) is Status.UNDEFINED
    d.set_continue(v)
    assert d.status(v) is Status.CONTINUE
    with pytest.raises(ValueError):
        d.set_output(v, 1)
    w = base_vertex(2, 2)
    d.set_output(w, 2)
    assert d.status(w) is Status.OUTPUT and d.output(w) == 2
    d.set_output(w, 2)  # same value is a no-op
    with pytest.raises(ValueError):
        d.set_output(w, 1)
