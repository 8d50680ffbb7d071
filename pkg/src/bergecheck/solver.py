"""Exact value function and solution multifunction on the lattice."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .infcompact import Objective
from .setmap import ConstraintForm, SetValuedMap
from .topo import GridSpace, Index


@dataclass(frozen=True)
class ValueFunction:
    grid: GridSpace
    values: dict[Index, float]

    def __getitem__(self, x: Index) -> float:
        return self.values[x]


@dataclass(frozen=True)
class SolutionMap:
    grid: GridSpace
    sets: dict[Index, frozenset[Index]]
    tau: float

    def __getitem__(self, x: Index) -> frozenset[Index]:
        return self.sets[x]


def near_minimizers(u: Objective, m: SetValuedMap, x: Index, v: float, tau: float) -> frozenset[Index]:
    """{y in Phi(x) : u(x, y) <= v + tau}; with tau = 0 exactly the argmin set."""
    bound = v + tau if math.isfinite(v) else v
    return frozenset(y for y in m.image(x) if u.value(m, x, y) <= bound)


def solve(u: Objective, m: SetValuedMap, tau: float = 0.0) -> tuple[ValueFunction, SolutionMap]:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    values: dict[Index, float] = {}
    sets: dict[Index, frozenset[Index]] = {}
    for x in m.x_grid.indices():
        ys = sorted(m.image(x))
        v = min(u.value(m, x, y) for y in ys)
        values[x] = v
        sets[x] = near_minimizers(u, m, x, v, tau)
    return ValueFunction(m.x_grid, values), SolutionMap(m.x_grid, sets, tau)


@dataclass(frozen=True)
class RefinementStep:
    coarse: int
    fine: int
    max_diff: float
    shared_points: int


def _refined_map(m: SetValuedMap, factor: int) -> SetValuedMap:
    if not isinstance(m.body, ConstraintForm):
        raise ValueError("refinement needs a constraint-form map; tabulated images do not extend off-lattice")
    return SetValuedMap(m.x_grid.refine(factor), m.y_grid.refine(factor), m.body)


def refine_compare(u: Objective, m: SetValuedMap, factors: Sequence[int]) -> list[RefinementStep]:
    """Sup-norm change of v at shared x points between successive refinements.

    Factor f maps each axis count m to (m - 1) f + 1, so refined lattices
    contain the coarse one.  Both x- and y-grids are refined.
    """
    if u.expr is None:
        raise ValueError("refinement needs an expression objective")
    if not factors or any(f < 2 for f in factors):
        raise ValueError("refinement factors must be >= 2")
    levels = [1, *factors]
    values = []
    for f in levels:
        mm = m if f == 1 else _refined_map(m, f)
        uu = Objective(u.x_dim, u.y_dim, expr=u.expr)
        values.append(solve(uu, mm)[0].values)
    steps = []
    for (fa, va), (fb, vb) in zip(zip(levels, values), zip(levels[1:], values[1:])):
        diff = 0.0
        shared = 0
        for ia, val_a in va.items():
            # position in coarse-grid units must land on a lattice point of the other grid
            ib = [Fraction(i * fb, fa) for i in ia]
            if any(c.denominator != 1 for c in ib):
                continue
            val_b = vb[tuple(int(c) for c in ib)]
            shared += 1
            if val_a == val_b:
                continue
            diff = max(diff, abs(val_a - val_b))
        steps.append(RefinementStep(fa, fb, diff, shared))
    return steps
