import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergecheck.errors import InvalidWindow
from bergecheck.topo import (
    CheckReport,
    CompactWindow,
    SequencePath,
    Witness,
    build_grid,
    decode_float,
    encode_float,
    exhaustive_paths,
    generate_paths,
    make_report,
    merge_reports,
    neighbors,
)


def test_build_grid_1d():
    g = build_grid([[0, 1]], [3])
    assert g.points() == [(0.0,), (0.5,), (1.0,)]


def test_build_grid_2d_corners():
    g = build_grid([[-1, 1], [0, 2]], [2, 2])
    assert set(g.points()) == {(-1.0, 0.0), (-1.0, 2.0), (1.0, 0.0), (1.0, 2.0)}


@pytest.mark.parametrize("windows,counts", [([[1, 1]], [2]), ([[2, 1]], [3]), ([[0, 1]], [1]), ([[0, 1]], [2, 2])])
def test_build_grid_invalid(windows, counts):
    with pytest.raises(InvalidWindow):
        build_grid(windows, counts)


def test_neighbors_examples():
    g = build_grid([[0, 1]], [3])
    assert neighbors(g, (1,), 0.5) == {(0,), (2,)}
    assert neighbors(g, (0,), 0.4) == frozenset()
    sq = build_grid([[0, 1], [0, 1]], [2, 2])
    assert neighbors(sq, (0, 0), 1.0) == {(0, 1), (1, 0)}


@given(
    st.lists(st.integers(2, 6), min_size=1, max_size=3),
    st.floats(0.05, 1.5),
    st.data(),
)
@settings(max_examples=60, deadline=None)
def test_neighbors_matches_brute_force(counts, delta, data):
    g = build_grid([[0, 1 + k] for k in range(len(counts))], counts)
    p = tuple(data.draw(st.integers(0, m - 1)) for m in counts)
    pts = np.array(g.points())
    d = np.linalg.norm(pts - np.array(g.coord(p)), axis=1)
    oracle = {q for q, dq in zip(g.indices(), d) if q != p and dq <= delta * (1 + 1e-9)}
    assert neighbors(g, p, delta) == oracle


@given(st.lists(st.integers(2, 5), min_size=1, max_size=2), st.floats(0.1, 2.0))
@settings(max_examples=40, deadline=None)
def test_neighbors_symmetric(counts, delta):
    g = build_grid([[0, 1]] * len(counts), counts)
    for p in g.indices():
        for q in neighbors(g, p, delta):
            assert p in neighbors(g, q, delta)


def test_generate_paths_constant_first():
    g = build_grid([[0, 1]], [3])
    paths = generate_paths(g, (1,), 3, 1, 0)
    assert len(paths) == 1 and paths[0].is_constant
    assert [g.coord(p)[0] for p in paths[0].points] == [0.5, 0.5, 0.5]


def test_generate_paths_single_step_approach():
    g = build_grid([[0, 1]], [3])
    paths = generate_paths(g, (2,), 2, 4, 0)
    coords = [tuple(g.coord(p)[0] for p in path.points) for path in paths]
    assert (0.5, 1.0) in coords


def test_generate_paths_rejects_short():
    g = build_grid([[0, 1]], [3])
    with pytest.raises(ValueError):
        generate_paths(g, (1,), 1, 1, 0)


@given(st.integers(2, 6), st.integers(2, 10), st.integers(1, 8), st.integers(0, 99), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_generate_paths_invariants(m, length, count, seed, reach):
    g = build_grid([[0, 1], [0, 2]], [m, m + 1])
    for limit in [(0, 0), (m - 1, m), (m // 2, m // 2)]:
        paths = generate_paths(g, limit, length, count, seed, reach)
        assert 1 <= len(paths) <= count
        assert paths[0].is_constant
        for p in paths:
            assert len(p) == length and p.points[-1] == limit
            d = [g.dist(q, limit) for q in p.points]
            assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
        assert paths == generate_paths(g, limit, length, count, seed, reach)


def test_sequence_path_validation():
    g = build_grid([[0, 1]], [5])
    with pytest.raises(ValueError):
        SequencePath(g, ((2,),), (2,))
    with pytest.raises(ValueError):
        SequencePath(g, ((3,), (0,), (2,)), (2,))  # distance grows
    with pytest.raises(ValueError):
        SequencePath(g, ((0,), (0,)), (2,))  # never reaches the limit


def test_exhaustive_paths_cover_neighbour_pairs():
    g = build_grid([[0, 1], [0, 1]], [3, 3])
    w = CompactWindow.full(g)
    delta = 0.75
    paths = exhaustive_paths(w, delta, 6)
    pairs = {(p.points[0], p.limit) for p in paths if not p.is_constant}
    oracle = {(q, x) for x in g.indices() for q in g.indices() if q != x and g.dist(q, x) <= delta}
    assert pairs == oracle
    assert sum(p.is_constant for p in paths) == g.size


def test_compact_window_from_box_and_nesting():
    g = build_grid([[-1, 1]], [21])
    w = CompactWindow.from_box(g, [[-0.25, 0.25]])
    assert [round(g.coord(i)[0], 12) for i in w.indices()] == [-0.2, -0.1, 0.0, 0.1, 0.2]
    assert w.is_subwindow_of(CompactWindow.full(g))
    with pytest.raises(InvalidWindow):
        CompactWindow.from_box(g, [[2, 3]])


def test_float_codec():
    for v in (math.inf, -math.inf, 0.5, -3.0):
        assert decode_float(encode_float(v)) == v
    assert encode_float(math.inf) == "+inf"


def test_report_invariants():
    w = Witness(((0.0,),), (1.0,), "bad")
    with pytest.raises(ValueError):
        CheckReport("c", "fail")
    with pytest.raises(ValueError):
        CheckReport("c", "pass", witnesses=[w])
    assert make_report("c", [], {}, {}, warnings=[w]).status == "warn"
    assert make_report("c", [w], {}, {}, warnings=[w]).status == "fail"
    many = [Witness(((float(i),),), (), "bad") for i in range(80)]
    r = make_report("c", many, {}, {})
    assert len(r.witnesses) == 50 and r.counters["violations"] == 80
    merged = merge_reports("m", [make_report("a", [], {}, {}), r], {})
    assert merged.status == "fail" and merged.witnesses == r.witnesses


def test_refine_contains_coarse_points():
    g = build_grid([[0, 2]], [5])
    f = g.refine(3)
    assert f.counts == (13,)
    fine = set(round(p[0], 12) for p in f.points())
    assert all(round(p[0], 12) in fine for p in g.points())
