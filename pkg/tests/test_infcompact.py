import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergecheck.infcompact import (
    Objective,
    check_function_lsc,
    check_inf_compact,
    check_k_inf_compact,
    check_kn_inf_compact,
    default_lambdas,
    level_set,
)
from bergecheck.setmap import SetValuedMap, graph_sample
from bergecheck.topo import CompactWindow, SequencePath, build_grid, exhaustive_paths, generate_paths


def full_graph(m):
    return graph_sample(m, CompactWindow.full(m.x_grid))


def lsc_oracle(u, m, delta, eps_val, upper=False):
    """Double loop over graph points in the product metric."""
    pts = [(x, y) for x in m.x_grid.indices() for y in sorted(m.image(x))]
    bad = set()
    for p in pts:
        cp = m.x_grid.coord(p[0]) + m.y_grid.coord(p[1])
        for q in pts:
            cq = m.x_grid.coord(q[0]) + m.y_grid.coord(q[1])
            if q == p or math.dist(cp, cq) > delta * (1 + 1e-9):
                continue
            up, uq = u.value(m, *p), u.value(m, *q)
            if (up < uq - eps_val) if upper else (up > uq + eps_val):
                bad.add(p)
    return bad


def unit_grids(nx=11, ny=11, y_window=(0.0, 1.0)):
    return build_grid([[0, 1]], [nx]), build_grid([list(y_window)], [ny])


def test_level_set_examples():
    xg, yg = unit_grids()
    m = SetValuedMap.from_constraints(xg, yg, [])
    zero = Objective.parse("0", 1, 1)
    g = full_graph(m)
    assert level_set(zero, -1, g).members == ()
    assert len(level_set(zero, 0, g).members) == len(g.pairs)
    # dyadic lattice: every difference and square is exact in binary floating point
    xg, yg = unit_grids(9, 9)
    m = SetValuedMap.from_constraints(xg, yg, [])
    g = full_graph(m)
    sq = Objective.parse("(y1-x1)^2", 1, 1)
    members = set(level_set(sq, 0.25, g).members)
    oracle = {(x, y) for x, y in g.pairs if abs(y[0] - x[0]) <= 4}
    assert members == oracle


def test_function_lsc_continuous_passes():
    # step sizes bounded by one mesh width h, |grad u| <= 2 * diameter
    xg, yg = unit_grids()
    m = SetValuedMap.from_constraints(xg, yg, [])
    u = Objective.parse("(y1-x1)^2", 1, 1)
    h = 0.1
    assert check_function_lsc(u, full_graph(m), h, 2 * 1.0 * h).status == "pass"


def test_function_lsc_injected_step_fails_at_that_point():
    xg, yg = unit_grids(5, 5)
    m = SetValuedMap.from_constraints(xg, yg, [])
    table = {(x, y): 0.0 for x in xg.indices() for y in yg.indices()}
    table[((2,), (2,))] = 1.0
    u = Objective.tabulated(1, 1, table)
    r = check_function_lsc(u, full_graph(m), None, 0.1)
    assert r.status == "fail"
    assert {w.points[0] for w in r.witnesses} == {(0.5, 0.5)}


def test_function_lsc_single_point_vacuous():
    xg, yg = unit_grids(2, 2)
    m = SetValuedMap.from_table(xg, yg, {(0,): [(0,)], (1,): [(1,)]})
    g = graph_sample(m, CompactWindow.single(xg, (0,)))
    u = Objective.parse("x1 + 100*y1", 1, 1)
    assert check_function_lsc(u, g, 0.5, 0.01).status == "pass"


@given(st.integers(0, 10_000), st.floats(0.1, 0.6), st.floats(0.05, 1.0), st.booleans())
@settings(max_examples=60, deadline=None)
def test_function_lsc_matches_brute_force(seed, delta, eps_val, upper):
    rng = np.random.default_rng(seed)
    xg, yg = unit_grids(5, 5)
    table = {x: [(int(j),) for j in rng.choice(5, size=rng.integers(1, 4), replace=False)] for x in xg.indices()}
    m = SetValuedMap.from_table(xg, yg, table)
    vals = {(x, y): float(rng.choice([rng.uniform(-1, 1), math.inf, -math.inf], p=[0.8, 0.1, 0.1]))
            for x in xg.indices() for y in m.image(x)}
    u = Objective.tabulated(1, 1, vals)
    r = check_function_lsc(u, full_graph(m), delta, eps_val, upper=upper)
    bad = lsc_oracle(u, m, delta, eps_val, upper)
    assert (r.status == "fail") == bool(bad)
    assert r.counters["violations"] == len(bad)


def test_inf_compact_thin_band_passes():
    xg, yg = unit_grids(11, 41, (-2.0, 3.0))
    m = SetValuedMap.from_constraints(xg, yg, [])
    u = Objective.parse("(y1-x1)^2", 1, 1)
    assert check_inf_compact(u, full_graph(m), [0.05], None, 3.0).status == "pass"


def test_inf_compact_product_reaches_top_edge():
    xg = build_grid([[-1, 1]], [11])
    yg = build_grid([[0, 2]], [11])
    m = SetValuedMap.from_constraints(xg, yg, [])
    u = Objective.parse("x1*y1", 1, 1)
    r = check_inf_compact(u, graph_sample(m, CompactWindow.single(xg, (0,))), [0.0])
    assert r.status == "warn"
    assert ((-1.0, 2.0),) in {w.points for w in r.witnesses}


def test_inf_compact_lambda_below_min_passes():
    xg, yg = unit_grids()
    m = SetValuedMap.from_constraints(xg, yg, [])
    u = Objective.parse("x1*y1 + 5", 1, 1)
    assert check_inf_compact(u, full_graph(m), [4.0]).status == "pass"


def test_inf_compact_constraint_closes_the_window():
    # the constraint y <= 1 marks the top edge as a genuine boundary
    xg = build_grid([[-1, 1]], [11])
    yg = build_grid([[0, 1]], [11])
    m = SetValuedMap.from_constraints(xg, yg, ["-y1", "y1 - 1"])
    u = Objective.parse("x1*y1", 1, 1)
    assert check_inf_compact(u, full_graph(m), [0.0], None, 0.5).status == "pass"


def test_k_inf_compact_examples():
    xg, yg = unit_grids(11, 21, (-1.0, 2.0))
    m = SetValuedMap.from_constraints(xg, yg, [])
    sq = Objective.parse("(y1-x1)^2", 1, 1)
    windows = [CompactWindow.full(xg), CompactWindow(xg, ((2, 5),))]
    assert check_k_inf_compact(sq, m, windows, [0.1], None, 2.0).status == "pass"
    zero = Objective.parse("0", 1, 1)
    r = check_k_inf_compact(zero, m, windows, [1.0])
    assert r.status == "warn" and r.counters["windows_warned"] == 2


def test_kn_compact_constant_map_continuous_u_passes():
    xg, yg = unit_grids()
    m = SetValuedMap.constant(xg, yg, [(3,), (4,), (5,)])
    u = Objective.parse("x1 + y1", 1, 1)
    paths = exhaustive_paths(CompactWindow.full(xg), 0.15, 8)
    for lam in (0.5, 1.0, 2.0):
        assert check_kn_inf_compact(u, m, paths, lam).status == "pass"


def test_kn_product_on_unbounded_proxy_passes_on_window():
    # finite proxy passes; the boundary warning comes from the K checker instead
    xg = build_grid([[-1, 1]], [21])
    yg = build_grid([[0, 1]], [11])
    m = SetValuedMap.from_constraints(xg, yg, ["-y1"])
    u = Objective.parse("x1*y1", 1, 1)
    top = (10,)
    path = SequencePath(xg, ((7,), (8,), (9,), (9,), (9,), (9,), (9,), (10,)), (10,))
    assert all(u.value(m, x, top) <= 0 for x in path.points)
    assert check_kn_inf_compact(u, m, [path], 0.0, eps_val=0.5).status == "pass"
    assert check_k_inf_compact(u, m, None, [0.0], None, 0.5).status == "warn"


def test_kn_excluded_cluster_value_fails():
    xg = build_grid([[0, 1]], [5])
    yg = build_grid([[0, 1]], [5])
    table = {x: ([(0,)] if x == (2,) else [(0,), (4,)]) for x in xg.indices()}
    m = SetValuedMap.from_table(xg, yg, table)
    vals = {(x, y): (0.0 if y == (4,) else 1.0) for x in xg.indices() for y in m.image(x)}
    u = Objective.tabulated(1, 1, vals)
    path = SequencePath(xg, ((1,),) * 7 + ((2,),), (2,))
    r = check_kn_inf_compact(u, m, [path], 0.5, eps=0.3)
    assert r.status == "fail"
    assert check_k_inf_compact(u, m, None, [0.5], eps=0.3).status == "fail"


def test_kn_discards_paths_without_admissible_points():
    xg, yg = unit_grids(5, 5)
    m = SetValuedMap.constant(xg, yg, [(2,)])
    u = Objective.parse("10 + x1", 1, 1)
    paths = generate_paths(xg, (2,), 8, 3, 0)
    r = check_kn_inf_compact(u, m, paths, 0.0)
    assert r.status == "pass" and r.counters["paths_discarded"] == len(paths)


def test_default_lambdas_span_min_to_median():
    xg, yg = unit_grids(3, 3)
    m = SetValuedMap.from_constraints(xg, yg, [])
    u = Objective.parse("x1 + y1", 1, 1)
    lams = default_lambdas(u, full_graph(m))
    assert lams[0] == 0.0 and lams[-1] == 1.0 and len(lams) == 5


def test_objective_cache_follows_lattice():
    u = Objective.parse("x1", 1, 1)
    a = SetValuedMap.constant(build_grid([[0, 1]], [3]), build_grid([[0, 1]], [3]), [(0,)])
    b = SetValuedMap.constant(build_grid([[0, 4]], [3]), build_grid([[0, 1]], [3]), [(0,)])
    assert (u.value(a, (2,), (0,)), u.value(b, (2,), (0,))) == (1.0, 4.0)
