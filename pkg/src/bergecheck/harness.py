"""End-to-end theorem verification on lattice instances.

Each ``verify_*`` runs hypothesis checkers and conclusion checkers and
classifies the instance.  Conclusion tolerances are the hypothesis ones plus
one mesh width.  The finite implications behind each theorem are exact under
these tolerances (see ``README.md``), so a CONTRADICTION verdict always
points at a checker bug.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from .infcompact import (
    DEFAULT_EPS_VAL,
    Objective,
    _contact_faces,
    check_function_lsc,
    check_inf_compact,
    check_k_inf_compact,
    check_kn_inf_compact,
    default_lambdas,
)
from .setmap import SetValuedMap, check_map_lsc, check_map_usc, graph_sample
from .solver import SolutionMap, ValueFunction, near_minimizers, solve
from .topo import (
    CheckReport,
    CompactWindow,
    GridSpace,
    Index,
    SequencePath,
    Witness,
    build_grid,
    default_delta,
    default_eps,
    exhaustive_paths,
    generate_paths,
    make_report,
    merge_reports,
    neighbors,
    within,
)

THEOREM_IDS = ("maximum-cg", "maximum-kn", "value-lsc", "solution-props", "infcompact-corollary")
VERIFIED, HYPOTHESIS_FAILED, CONTRADICTION = "verified", "hypothesis-failed", "CONTRADICTION"


@dataclass(frozen=True)
class Tolerances:
    delta: Optional[float] = None  # x-neighbour radius; default 1.5 x-mesh widths
    eps: Optional[float] = None  # set-distance tolerance; default 1.5 max mesh width
    eps_val: float = DEFAULT_EPS_VAL
    tau: float = 0.0
    lambdas: Optional[tuple[float, ...]] = None

    def resolve(self, x_grid: GridSpace, y_grid: GridSpace) -> "Tolerances":
        return replace(
            self,
            delta=default_delta(x_grid) if self.delta is None else self.delta,
            eps=default_eps(x_grid, y_grid) if self.eps is None else self.eps,
        )


@dataclass(frozen=True)
class PathBudget:
    length: int = 8
    count: int = 4
    seed: int = 0
    reach: int = 1
    selections: int = 4


@dataclass
class TheoremReport:
    theorem: str
    hypotheses: dict[str, CheckReport]
    conclusions: dict[str, CheckReport]
    verdict: str = ""
    witness: Optional[Witness] = None

    def __post_init__(self):
        if not self.verdict:
            self.verdict, self.witness = classify(self.hypotheses, self.conclusions)

    def to_dict(self) -> dict[str, Any]:
        return {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "witness": self.witness.to_dict() if self.witness else None,
            "hypotheses": [r.to_dict() for r in self.hypotheses.values()],
            "conclusions": [r.to_dict() for r in self.conclusions.values()],
        }


def classify(hypotheses: dict[str, CheckReport], conclusions: dict[str, CheckReport]):
    """Warn counts as not passing on both sides."""
    if not all(r.passed for r in hypotheses.values()):
        return HYPOTHESIS_FAILED, None
    for r in conclusions.values():
        if not r.passed:
            return CONTRADICTION, r.witnesses[0]
    return VERIFIED, None


# ------------------------------------------------------------------- context

@dataclass
class _Ctx:
    u: Objective
    m: SetValuedMap
    tol: Tolerances
    budget: PathBudget
    windows: list[CompactWindow]
    full: Any
    v: ValueFunction
    sol: SolutionMap
    lambdas: list[float]
    mesh: float
    graph_delta: float

    @property
    def eps_out(self) -> float:
        return self.tol.eps + self.mesh

    @property
    def eps_val_out(self) -> float:
        return self.tol.eps_val + self.mesh


def _context(u, m, tol, budget, windows) -> _Ctx:
    tol = (tol or Tolerances()).resolve(m.x_grid, m.y_grid)
    budget = budget or PathBudget()
    full_w = CompactWindow.full(m.x_grid)
    full = graph_sample(m, full_w)
    v, sol = solve(u, m, tol.tau)
    lambdas = list(tol.lambdas) if tol.lambdas else default_lambdas(u, full)
    finite_v = [val for val in v.values.values() if math.isfinite(val)]
    if finite_v:
        # level sets must reach every finite minimum for the interior/lsc transfers
        lambdas.append(max(finite_v))
    lambdas = sorted(set(lambdas))
    wins = [full_w] + [w for w in (windows or []) if w != full_w]
    return _Ctx(
        u, m, tol, budget, wins, full, v, sol, lambdas,
        mesh=max(m.x_grid.max_mesh, m.y_grid.max_mesh),
        graph_delta=math.hypot(tol.delta, tol.eps),
    )


def _paths(c: _Ctx) -> list[SequencePath]:
    b = c.budget
    out = exhaustive_paths(CompactWindow.full(c.m.x_grid), c.tol.delta, max(b.length, 6))
    for x in c.m.x_grid.indices():
        out += generate_paths(c.m.x_grid, x, b.length, b.count, b.seed, b.reach)
    return out


# ------------------------------------------------------------ hypothesis side

def _kn(c: _Ctx) -> CheckReport:
    paths = _paths(c)
    parts = [
        check_kn_inf_compact(c.u, c.m, paths, lam, c.tol.eps, c.budget.selections, c.budget.seed,
                             delta=c.graph_delta, eps_val=c.tol.eps_val)
        for lam in c.lambdas
    ]
    tol = {"delta": c.graph_delta, "eps": c.tol.eps, "eps_val": c.tol.eps_val, "lambdas": c.lambdas}
    return merge_reports("kn_inf_compact", parts, tol)


def _k(c: _Ctx) -> CheckReport:
    return check_k_inf_compact(c.u, c.m, c.windows, c.lambdas, c.graph_delta, c.tol.eps_val,
                               eps=c.tol.eps, x_delta=c.tol.delta)


def _u_usc(c: _Ctx) -> CheckReport:
    return check_function_lsc(c.u, c.full, c.graph_delta, c.tol.eps_val, upper=True)


# ------------------------------------------------------------ conclusion side

def check_grid_function(
    values: dict[Index, float],
    grid: GridSpace,
    delta: float,
    eps_val: float,
    *,
    upper: bool = False,
    xs: Optional[Sequence[Index]] = None,
    name: Optional[str] = None,
) -> CheckReport:
    """Semicontinuity proxy for a function tabulated on the x-grid."""
    xs = grid.indices() if xs is None else list(xs)
    inside = set(xs)
    violations = []
    for x in xs:
        nb = [q for q in sorted(neighbors(grid, x, delta)) if q in inside]
        if not nb:
            continue
        if upper:
            q = max(nb, key=lambda p: values[p])
            bad = values[x] < values[q] - eps_val
        else:
            q = min(nb, key=lambda p: values[p])
            bad = values[x] > values[q] + eps_val
        if bad:
            violations.append(Witness(
                (grid.coord(x), grid.coord(q)), (values[x], values[q]),
                ("upward" if upper else "downward") + " jump of v between neighbouring x",
            ))
    name = name or ("value_usc" if upper else "value_lsc")
    return make_report(name, violations, {"delta": delta, "eps_val": eps_val}, {"points": len(xs)})


def solution_as_map(c: _Ctx) -> SetValuedMap:
    return SetValuedMap.from_table(c.m.x_grid, c.m.y_grid, c.sol.sets)


def _solution_usc(c: _Ctx) -> CheckReport:
    """Phi*(x') must lie within eps_out of the 2*eps_val-minimizers at x.

    Across one lattice step the minimum can move by eps_val, so exact argmin
    sets of neighbouring columns are compared against near-minimizers.
    """
    slack = 2 * c.tol.eps_val

    def outer(x: Index) -> np.ndarray:
        ys = near_minimizers(c.u, c.m, x, c.v[x], slack)
        return c.m.y_grid.coords(sorted(ys))

    rep = check_map_usc(solution_as_map(c), c.tol.delta, c.eps_out, outer=outer, name="solution_usc")
    rep.tolerances["argmin_slack"] = slack
    return rep


def _solution_compact(c: _Ctx) -> CheckReport:
    """Phi*(x) finite and away from truncated faces wherever v(x) < +inf."""
    contacts = []
    count = 0
    for x, ys in c.sol.sets.items():
        if c.v[x] == math.inf:
            continue
        for y in sorted(ys):
            count += 1
            faces = _contact_faces(c.u, c.full, x, y, c.v[x], False)
            if faces:
                contacts.append(Witness(
                    (c.m.x_grid.coord(x) + c.m.y_grid.coord(y),), (c.v[x],),
                    f"minimizer on a truncated face ({','.join(faces)})",
                ))
    return make_report("solution_compact", [], {}, {"points": count}, warnings=contacts)


def _solution_nonempty(c: _Ctx) -> CheckReport:
    bad = [Witness((c.m.x_grid.coord(x),), (c.v[x],), "empty solution set")
           for x, ys in c.sol.sets.items() if not ys]
    return make_report("solution_nonempty", bad, {}, {"points": len(c.sol.sets)})


def _solution_infinite(c: _Ctx) -> CheckReport:
    bad = []
    n = 0
    for x, ys in c.sol.sets.items():
        if c.v[x] == math.inf:
            n += 1
            if ys != c.m.image(x):
                bad.append(Witness((c.m.x_grid.coord(x),), (c.v[x],), "v = +inf but Phi*(x) != Phi(x)"))
    return make_report("solution_infinite_column", bad, {}, {"points": n})


def _value_level_sets(c: _Ctx) -> CheckReport:
    """Level sets of v must not continue past truncated faces of the x-window."""
    contacts = []
    for lam in c.lambdas:
        for x in c.m.x_grid.indices():
            if c.v[x] > lam or not c.m.x_grid.on_boundary(x):
                continue
            for y in sorted(c.m.image(x)):
                if c.u.value(c.m, x, y) > lam:
                    continue
                faces = [f for f in _contact_faces(c.u, c.full, x, y, lam, True) if f.startswith("x")]
                if faces:
                    contacts.append(Witness(
                        (c.m.x_grid.coord(x),), (c.v[x], lam),
                        f"level set of v at lambda={lam:.6g} reaches the x-window edge ({','.join(faces)})",
                    ))
                    break
    return make_report("value_level_sets", [], {"lambdas": c.lambdas}, {"levels": len(c.lambdas)},
                       warnings=contacts)


# ---------------------------------------------------------------- theorems

def verify_maximum_theorem(
    u: Objective,
    m: SetValuedMap,
    tolerances: Tolerances | None = None,
    budget: PathBudget | None = None,
    seed: int | None = None,
    *,
    variant: str = "kn",
    windows: Sequence[CompactWindow] | None = None,
) -> TheoremReport:
    """Continuity of v and usc/compactness of Phi* from lsc Phi, usc u and
    KN- (or K-) inf-compactness of u."""
    if variant not in ("kn", "cg"):
        raise ValueError("variant must be 'kn' or 'cg'")
    if seed is not None:
        budget = replace(budget or PathBudget(), seed=seed)
    c = _context(u, m, tolerances, budget, windows)
    hyps = {"map_lsc": check_map_lsc(m, c.tol.delta, c.tol.eps)}
    if variant == "kn":
        hyps["kn_inf_compact"] = _kn(c)
    # on lattices K- and KN-inf-compactness coincide, so both variants carry the K check
    hyps["k_inf_compact"] = _k(c)
    hyps["function_usc"] = _u_usc(c)
    concl = {
        "value_lsc": check_grid_function(c.v.values, m.x_grid, c.tol.delta, c.eps_val_out),
        "value_usc": check_grid_function(c.v.values, m.x_grid, c.tol.delta, c.eps_val_out, upper=True),
        "solution_usc": _solution_usc(c),
        "solution_compact": _solution_compact(c),
    }
    return TheoremReport(f"maximum-{variant}", hyps, concl)


def verify_value_semicontinuity(
    u: Objective,
    m: SetValuedMap,
    tolerances: Tolerances | None = None,
    budget: PathBudget | None = None,
    seed: int | None = None,
    *,
    windows: Sequence[CompactWindow] | None = None,
) -> TheoremReport:
    if seed is not None:
        budget = replace(budget or PathBudget(), seed=seed)
    c = _context(u, m, tolerances, budget, windows)
    hyps = {"kn_inf_compact": _kn(c), "k_inf_compact": _k(c)}
    concl = {"value_lsc": check_grid_function(c.v.values, m.x_grid, c.tol.delta, c.eps_val_out)}
    for i, w in enumerate(c.windows[1:]):
        concl[f"value_lsc_window{i}"] = check_grid_function(
            c.v.values, m.x_grid, c.tol.delta, c.eps_val_out, xs=w.indices(), name=f"value_lsc_window{i}")
    return TheoremReport("value-lsc", hyps, concl)


def verify_solution_properties(
    u: Objective,
    m: SetValuedMap,
    tolerances: Tolerances | None = None,
    *,
    windows: Sequence[CompactWindow] | None = None,
) -> TheoremReport:
    c = _context(u, m, tolerances, None, windows)
    hyps = {"k_inf_compact": _k(c)}
    concl = {
        "solution_nonempty": _solution_nonempty(c),
        "solution_infinite_column": _solution_infinite(c),
        "solution_compact": _solution_compact(c),
    }
    return TheoremReport("solution-props", hyps, concl)


def verify_infcompact_corollary(
    u: Objective,
    m: SetValuedMap,
    lambdas: Sequence[float] | None = None,
    tolerances: Tolerances | None = None,
) -> TheoremReport:
    tol = tolerances or Tolerances()
    if lambdas is not None:
        tol = replace(tol, lambdas=tuple(lambdas))
    c = _context(u, m, tol, None, None)
    hyp = check_inf_compact(u, c.full, c.lambdas, c.graph_delta, c.tol.eps_val,
                            eps=c.tol.eps, x_delta=c.tol.delta, x_open=True, name="inf_compact_graph")
    concl = {
        "value_level_sets": _value_level_sets(c),
        "value_lsc": check_grid_function(c.v.values, m.x_grid, c.tol.delta, c.eps_val_out),
    }
    return TheoremReport("infcompact-corollary", {"inf_compact_graph": hyp}, concl)


def verify(theorem: str, u: Objective, m: SetValuedMap, tolerances: Tolerances | None = None,
           budget: PathBudget | None = None, windows: Sequence[CompactWindow] | None = None) -> TheoremReport:
    if theorem == "maximum-kn":
        return verify_maximum_theorem(u, m, tolerances, budget, windows=windows)
    if theorem == "maximum-cg":
        return verify_maximum_theorem(u, m, tolerances, budget, variant="cg", windows=windows)
    if theorem == "value-lsc":
        return verify_value_semicontinuity(u, m, tolerances, budget, windows=windows)
    if theorem == "solution-props":
        return verify_solution_properties(u, m, tolerances, windows=windows)
    if theorem == "infcompact-corollary":
        return verify_infcompact_corollary(u, m, tolerances=tolerances)
    raise ValueError(f"unknown theorem id {theorem!r}")


# --------------------------------------------------------------- generators

INSTANCE_KINDS = ("usc-compact-lsc", "random-tabulated", "adversarial-jump")
_KIND_CODE = {k: i for i, k in enumerate(INSTANCE_KINDS)}


def _as_counts(s) -> tuple[int, ...]:
    return (int(s),) if np.isscalar(s) else tuple(int(v) for v in s)


def _walk(rng: np.random.Generator, n: int, lo: int, hi: int) -> np.ndarray:
    """Random walk with steps in {-1, 0, 1} clipped to [lo, hi]."""
    out = np.empty(n, dtype=int)
    out[0] = rng.integers(lo, hi + 1)
    for k in range(1, n):
        out[k] = min(hi, max(lo, out[k - 1] + int(rng.integers(-1, 2))))
    return out


def _lipschitz_boxes(rng, x_grid: GridSpace, y_counts) -> dict[Index, frozenset[Index]]:
    """Images are index boxes whose edges move at most one cell per x step.

    Each edge is a min (lower) or max (upper) of per-axis random walks, so it
    is 1-Lipschitz in the Chebyshev index metric.
    """
    import itertools

    n_axes = x_grid.dim
    lows, highs = [], []
    for ny in y_counts:
        lo_walks = [_walk(rng, m, 1, ny - 2) for m in x_grid.counts]
        hi_walks = [np.maximum(w, _walk(rng, len(w), 1, ny - 2)) for w in lo_walks]
        lows.append(lo_walks)
        highs.append(hi_walks)
    table = {}
    for x in x_grid.indices():
        ranges = []
        for k in range(len(y_counts)):
            a = min(int(lows[k][i][x[i]]) for i in range(n_axes))
            b = max(int(highs[k][i][x[i]]) for i in range(n_axes))
            ranges.append(range(a, b + 1))
        table[x] = frozenset(itertools.product(*ranges))
    return table


def _max_affine(rng, m: SetValuedMap, slope: float, pieces: int = 3) -> dict:
    """u = max of a few affine functions of the coordinates (continuous, hence lsc)."""
    dx, dy = m.x_grid.dim, m.y_grid.dim
    A = rng.uniform(-slope, slope, size=(pieces, dx + dy))
    b = rng.uniform(-1, 1, size=pieces)
    table = {}
    for x in m.x_grid.indices():
        xc = m.x_grid.coord(x)
        for y in m.image(x):
            z = np.array(xc + m.y_grid.coord(y))
            table[(x, y)] = float(np.max(A @ z + b))
    return table


def generate_instance(kind: str, sizes, seed: int) -> tuple[Objective, SetValuedMap]:
    """Seeded tabulated instance.

    ``sizes`` is ``(nx, ny)`` with ints (1-D axes) or tuples of per-axis counts,
    at most 12 points per axis.  Kinds:

    * ``usc-compact-lsc``: images are interior boxes moving one cell per x step
      (usc and compact at default tolerances); u is a max of affine pieces.
    * ``random-tabulated``: random interior images and values, mixing smooth
      and rough objectives, occasionally with +-inf entries.
    * ``adversarial-jump``: a planted jump in Phi (usc and lsc both fail).
    """
    if kind not in INSTANCE_KINDS:
        raise ValueError(f"unknown instance kind {kind!r}")
    xs, ys = _as_counts(sizes[0]), _as_counts(sizes[1])
    if max(xs + ys) > 12 or min(xs) < 2:
        raise ValueError("sizes must be between 2 and 12 points per axis")
    if min(ys) < 3:
        raise ValueError("y axes need at least 3 points for interior images")
    rng = np.random.default_rng([seed, _KIND_CODE[kind]])
    x_grid = build_grid([[0.0, 1.0]] * len(xs), xs, closed=True)

    if kind == "usc-compact-lsc":
        if len(set(xs)) != 1:
            raise ValueError("usc-compact-lsc needs equal counts on every x axis")
        y_grid = build_grid([[0.0, 1.0]] * len(ys), ys)
        m = SetValuedMap.from_table(x_grid, y_grid, _lipschitz_boxes(rng, x_grid, ys))
        u = Objective.tabulated(x_grid.dim, y_grid.dim, _max_affine(rng, m, 0.1))
        return u, m

    if kind == "adversarial-jump":
        if min(ys) < 6 or len(ys) != 1:
            raise ValueError("adversarial-jump needs a 1-D y axis with at least 6 points")
        ny = ys[0]
        y_grid = build_grid([[0.0, float(ny - 1)]], ys)
        pivot = int(rng.integers(1, xs[0]))
        table = {}
        for x in x_grid.indices():
            table[x] = frozenset({(1,), (ny - 2,)}) if x[0] >= pivot else frozenset({(1,)})
        m = SetValuedMap.from_table(x_grid, y_grid, table)
        u = Objective.tabulated(x_grid.dim, 1, _max_affine(rng, m, 0.05))
        return u, m

    # random-tabulated
    y_grid = build_grid([[0.0, 1.0]] * len(ys), ys)
    if rng.random() < 0.3 and len(set(xs)) == 1:
        table = _lipschitz_boxes(rng, x_grid, ys)
    else:
        interior = [y for y in y_grid.indices() if not y_grid.on_boundary(y)]
        table = {}
        for x in x_grid.indices():
            k = int(rng.integers(1, min(8, len(interior)) + 1))
            pick = rng.choice(len(interior), size=k, replace=False)
            table[x] = frozenset(interior[int(i)] for i in pick)
    m = SetValuedMap.from_table(x_grid, y_grid, table)
    if rng.random() < 0.5:
        vals = _max_affine(rng, m, 0.1)
    else:
        vals = {(x, y): float(rng.uniform(-1, 1)) for x in x_grid.indices() for y in m.image(x)}
    if rng.random() < 0.3:
        for key in sorted(vals):
            r = rng.random()
            if r < 0.08:
                vals[key] = math.inf
            elif r < 0.12:
                vals[key] = -math.inf
    return Objective.tabulated(x_grid.dim, y_grid.dim, vals), m


def max_workers() -> int:
    env = os.environ.get("BERGECHECK_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_suite(fn: Callable[[int], Any], seeds: Iterable[int]) -> list[Any]:
    """Run ``fn`` per seed on a thread pool; results come back in seed order."""
    seeds = list(seeds)
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        return list(pool.map(fn, seeds))
