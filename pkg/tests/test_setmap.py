import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergecheck.errors import EmptyImage
from bergecheck.setmap import (
    SetValuedMap,
    check_k_upper_semicompact,
    check_kn_upper_semicompact,
    check_map_lsc,
    check_map_usc,
    graph_sample,
)
from bergecheck.topo import CompactWindow, SequencePath, build_grid, exhaustive_paths, generate_paths

X = build_grid([[0, 1]], [11])
Y = build_grid([[0, 1]], [11])


def jump_map(grow: bool) -> SetValuedMap:
    """{0} on one side of x = 0.5 and {0, 1} on the other."""
    small, big = [(0,)], [(0,), (10,)]
    table = {x: (big if (X.coord(x)[0] >= 0.5) == grow else small) for x in X.indices()}
    return SetValuedMap.from_table(X, Y, table)


def semidistance_oracle(m, delta, eps, reverse=False):
    """Pure-Python double loop: (x, x', y) with y in Phi(x) farther than eps from Phi(x')."""
    bad = []
    for x in m.x_grid.indices():
        for xp in m.x_grid.indices():
            if xp == x or m.x_grid.dist(x, xp) > delta * (1 + 1e-9):
                continue
            src, dst = (xp, x) if reverse else (x, xp)
            for y in m.image(src):
                d = min(math.dist(m.y_grid.coord(y), m.y_grid.coord(z)) for z in m.image(dst))
                if d > eps * (1 + 1e-9):
                    bad.append((x, xp, y))
    return bad


def test_image_table_lookup():
    m = SetValuedMap.from_table(X, Y, {x: [(0,), (10,)] for x in X.indices()})
    assert {Y.coord(y) for y in m.image((0,))} == {(0.0,), (1.0,)}


def test_image_from_constraint():
    xg = build_grid([[0, 1]], [3])
    yg = build_grid([[0, 2]], [5])
    m = SetValuedMap.from_constraints(xg, yg, ["y1 - 1 - x1"])
    assert sorted(yg.coord(y)[0] for y in m.image((1,))) == [0.0, 0.5, 1.0, 1.5]


def test_empty_image():
    m = SetValuedMap.from_constraints(X, Y, ["y1 + 10"])
    with pytest.raises(EmptyImage):
        m.image((0,))


def test_graph_sample_sizes_and_monotonicity():
    xg = build_grid([[0, 1]], [3])
    m = SetValuedMap.constant(xg, Y, [(0,)])
    assert len(graph_sample(m, CompactWindow.full(xg)).pairs) == 3
    m4 = SetValuedMap.constant(xg, Y, [(0,), (1,), (2,), (3,)])
    assert len(graph_sample(m4, CompactWindow.single(xg, (1,))).pairs) == 4
    w1 = CompactWindow(X, ((2, 4),))
    w2 = CompactWindow(X, ((1, 8),))
    full = jump_map(True)
    assert set(graph_sample(full, w1).pairs) <= set(graph_sample(full, w2).pairs)


def test_constant_map_passes_both():
    m = SetValuedMap.constant(X, Y, [(2,), (5,)])
    assert check_map_lsc(m, 0.15, 0.01).status == "pass"
    assert check_map_usc(m, 0.15, 0.01).status == "pass"


def test_shrinking_jump_fails_lsc_with_witness():
    m = jump_map(False)
    r = check_map_lsc(m, 0.15, 0.1)
    assert r.status == "fail"
    x, xp, y = r.witnesses[0].points
    assert y == (1.0,) and abs(x[0] - 0.5) <= 0.1 and abs(xp[0] - 0.5) <= 0.1


def test_growing_jump_fails_usc_with_witness():
    r = check_map_usc(jump_map(True), 0.15, 0.1)
    assert r.status == "fail"
    assert {w.points[2] for w in r.witnesses} == {(1.0,)}


@pytest.mark.parametrize("grow", [True, False])
def test_jump_maps_fail_both_directions(grow):
    # With a symmetric neighbour relation, the lsc and usc proxies examine the
    # same ordered pairs, so a jump in either direction fails both checks.
    m = jump_map(grow)
    assert check_map_lsc(m, 0.15, 0.1).status == "fail"
    assert check_map_usc(m, 0.15, 0.1).status == "fail"
    assert len(semidistance_oracle(m, 0.15, 0.1)) == 1  # y = 1 across the single jump pair


def _random_map(seed, nx=6, ny=6):
    rng = np.random.default_rng(seed)
    xg = build_grid([[0, 1]], [nx])
    yg = build_grid([[0, 1]], [ny])
    table = {x: [(int(j),) for j in rng.choice(ny, size=rng.integers(1, 4), replace=False)] for x in xg.indices()}
    return SetValuedMap.from_table(xg, yg, table)


@given(st.integers(0, 10_000), st.floats(0.05, 0.6), st.floats(0.01, 0.8))
@settings(max_examples=60, deadline=None)
def test_lsc_and_usc_match_brute_force(seed, delta, eps):
    m = _random_map(seed)
    lsc = check_map_lsc(m, delta, eps)
    usc = check_map_usc(m, delta, eps)
    lsc_bad = semidistance_oracle(m, delta, eps)
    usc_bad = semidistance_oracle(m, delta, eps, reverse=True)
    assert (lsc.status == "fail") == bool(lsc_bad)
    assert (usc.status == "fail") == bool(usc_bad)
    assert lsc.counters["violations"] == len(lsc_bad)
    assert usc.counters["violations"] == len(usc_bad)


def test_k_upper_semicompact_examples():
    w = CompactWindow.full(X)
    middle = SetValuedMap.constant(X, Y, [(4,), (5,), (6,)])
    assert check_k_upper_semicompact(middle, w).status == "pass"
    everything = SetValuedMap.constant(X, Y, Y.indices())
    assert check_k_upper_semicompact(everything, w).status == "warn"
    assert check_k_upper_semicompact(jump_map(True), w, 0.15, 0.1).status == "fail"


def test_k_upper_semicompact_closed_y_space_never_touches():
    yc = build_grid([[0, 1]], [11], closed=True)
    m = SetValuedMap.constant(X, yc, yc.indices())
    assert check_k_upper_semicompact(m, CompactWindow.full(X)).status == "pass"


def test_kn_constant_map_passes():
    m = SetValuedMap.constant(X, Y, [(1,), (7,)])
    paths = exhaustive_paths(CompactWindow.full(X), 0.15, 8)
    assert check_kn_upper_semicompact(m, paths, 0.1).status == "pass"


def test_kn_identity_like_map_passes():
    m = SetValuedMap.from_table(X, Y, {x: [x] for x in X.indices()})
    paths = []
    for x in X.indices():
        paths += generate_paths(X, x, 8, 4, 0)
    paths += exhaustive_paths(CompactWindow.full(X), 0.15, 8)
    assert check_kn_upper_semicompact(m, paths).status == "pass"


def test_kn_growing_jump_with_outside_limit_fails():
    m = jump_map(True)
    # approach 0.5 from above, then assign the limit 0.4 just outside the jump
    path = SequencePath(X, ((7,), (6,), (5,), (5,), (5,), (5,), (5,), (5,)), (4,))
    r = check_kn_upper_semicompact(m, [path], 0.1)
    assert r.status == "fail"
    assert any(w.reason.startswith("farthest") for w in r.witnesses)


def test_kn_selection_seeded_and_deterministic():
    m = _random_map(3)
    paths = exhaustive_paths(CompactWindow.full(m.x_grid), 0.3, 8)
    a = check_kn_upper_semicompact(m, paths, 0.2, seed=5)
    b = check_kn_upper_semicompact(m, paths, 0.2, seed=5)
    assert a.to_dict() == b.to_dict()
