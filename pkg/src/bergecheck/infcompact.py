"""Level sets of the objective and the function-side compactness checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import exprparse
from .errors import DomainError
from .setmap import (
    GraphSample,
    SetValuedMap,
    _path_witness,
    accumulation_violation,
    graph_sample,
    selections,
)
from .topo import (
    CheckReport,
    CompactWindow,
    GridSpace,
    Index,
    SequencePath,
    Witness,
    default_delta,
    default_eps,
    make_report,
    merge_reports,
    neighbors,
    within,
)

DEFAULT_EPS_VAL = 0.25
DEFAULT_LAMBDA_COUNT = 5


@dataclass(eq=False)
class Objective:
    """u(x, y) as an expression, or as a table over graph points."""

    x_dim: int
    y_dim: int
    expr: Optional[exprparse.Expr] = None
    table: Optional[Mapping[tuple[Index, Index], float]] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if (self.expr is None) == (self.table is None):
            raise ValueError("give exactly one of expr or table")
        if self.expr is not None:
            exprparse.check_dims(self.expr, self.x_dim, self.y_dim)

    @classmethod
    def parse(cls, text: str, x_dim: int, y_dim: int) -> "Objective":
        return cls(x_dim, y_dim, expr=exprparse.parse(text, x_dim, y_dim))

    @classmethod
    def tabulated(cls, x_dim: int, y_dim: int, table: Mapping[tuple[Index, Index], float]) -> "Objective":
        return cls(x_dim, y_dim, table={(tuple(x), tuple(y)): float(v) for (x, y), v in table.items()})

    def value(self, m: SetValuedMap, x: Index, y: Index) -> float:
        grids = self._cache.get("grids")
        if grids is None or grids[0] is not m.x_grid or grids[1] is not m.y_grid:
            if grids is None or grids != (m.x_grid, m.y_grid):
                # cached values are keyed by lattice index, so a new lattice starts afresh
                self._cache.clear()
            self._cache["grids"] = (m.x_grid, m.y_grid)
        key = (x, y)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.table is not None:
            v = self.table[key]
        else:
            xc, yc = m.x_grid.coord(x), m.y_grid.coord(y)
            try:
                v = exprparse.evaluate(self.expr, xc, yc)
            except DomainError as exc:
                raise DomainError(f"u undefined at x={xc}, y={yc}: {exc}") from None
        self._cache[key] = v
        return v

    def value_at(self, x: Sequence[float], y: Sequence[float]) -> Optional[float]:
        """Value at arbitrary coordinates; None for tabulated objectives."""
        if self.expr is None:
            return None
        return exprparse.evaluate(self.expr, x, y)

    def values(self, domain: GraphSample) -> np.ndarray:
        return np.array([self.value(domain.map, x, y) for x, y in domain.pairs], dtype=float)


@dataclass(frozen=True)
class LevelSet:
    lam: float
    domain: GraphSample
    members: tuple[tuple[Index, Index], ...]


def level_set(u: Objective, lam: float, domain: GraphSample) -> LevelSet:
    members = tuple(p for p in domain.pairs if u.value(domain.map, *p) <= lam)
    return LevelSet(lam, domain, members)


def default_lambdas(u: Objective, domain: GraphSample, count: int = DEFAULT_LAMBDA_COUNT) -> list[float]:
    """``count`` values evenly spanning [min u, median u] over the finite values."""
    vals = u.values(domain)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return [0.0]
    lo, med = float(vals.min()), float(np.median(vals))
    return sorted(set(float(v) for v in np.linspace(lo, med, count)))


# ---------------------------------------------------------------- graph geometry

def _graph_arrays(domain: GraphSample):
    m = domain.map
    xs = m.x_grid.coords([p[0] for p in domain.pairs])
    ys = m.y_grid.coords([p[1] for p in domain.pairs])
    return xs, ys


def graph_neighbor_mask(domain: GraphSample, delta: float) -> np.ndarray:
    """Boolean matrix: pairs (p, q), p != q, within delta in the product metric."""
    xs, ys = _graph_arrays(domain)
    dx = np.sqrt(((xs[:, None, :] - xs[None, :, :]) ** 2).sum(axis=2))
    dy = np.sqrt(((ys[:, None, :] - ys[None, :, :]) ** 2).sum(axis=2))
    d = np.hypot(dx, dy)
    mask = d <= delta * (1 + 1e-9) + 1e-15
    np.fill_diagonal(mask, False)
    return mask


def check_function_lsc(
    u: Objective,
    domain: GraphSample,
    delta: float | None = None,
    eps_val: float = DEFAULT_EPS_VAL,
    *,
    upper: bool = False,
) -> CheckReport:
    """u(p) <= min over graph neighbours q of u(q) + eps_val, at every graph point.

    With ``upper=True`` the inequality is mirrored (u(p) >= max u(q) - eps_val),
    giving the upper semicontinuity check.
    """
    m = domain.map
    if delta is None:
        delta = 1.5 * max(m.x_grid.max_mesh, m.y_grid.max_mesh)
    if delta <= 0 or eps_val <= 0:
        raise ValueError("delta and eps_val must be positive")
    vals = u.values(domain)
    mask = graph_neighbor_mask(domain, delta)
    name = "function_usc" if upper else "function_lsc"
    violations = []
    for i, (x, y) in enumerate(domain.pairs):
        nbr = np.flatnonzero(mask[i])
        if nbr.size == 0:
            continue
        if upper:
            j = nbr[int(np.argmax(vals[nbr]))]
            bad = vals[i] < vals[j] - eps_val
            reason = f"upward jump: u(q)={vals[j]:.6g} exceeds u(p)={vals[i]:.6g} by more than eps_val"
        else:
            j = nbr[int(np.argmin(vals[nbr]))]
            bad = vals[i] > vals[j] + eps_val
            reason = f"downward jump: u(q)={vals[j]:.6g} below u(p)={vals[i]:.6g} by more than eps_val"
        if bad:
            q = domain.pairs[j]
            violations.append(Witness(
                (m.x_grid.coord(x) + m.y_grid.coord(y), m.x_grid.coord(q[0]) + m.y_grid.coord(q[1])),
                (float(vals[i]), float(vals[j])),
                reason,
            ))
    return make_report(name, violations, {"delta": delta, "eps_val": eps_val}, {"points": len(domain.pairs)})


def _contact_faces(u: Objective, domain: GraphSample, x: Index, y: Index, lam: float, x_open: bool):
    """Faces through which the level-set member (x, y) continues past the sampled box."""
    m = domain.map
    faces = []
    xc, yc = m.x_grid.coord(x), m.y_grid.coord(y)
    cands = []
    if not m.y_grid.closed:
        cands += [("y", a, s, xc, m.y_grid.outward(y, a, s)) for a, s in m.y_grid.on_boundary(y)]
    if x_open and not m.x_grid.closed:
        cands += [("x", a, s, m.x_grid.outward(x, a, s), yc) for a, s in m.x_grid.on_boundary(x)]
    for axis_name, a, s, xo, yo in cands:
        if m.feasible_at(xo, yo) is False:
            continue
        try:
            val = u.value_at(xo, yo)
        except DomainError:
            val = None
        if val is None or val <= lam:
            faces.append(f"{axis_name}{a}{'+' if s > 0 else '-'}")
    return faces


def level_set_contacts(u: Objective, ls: LevelSet, x_open: bool = False) -> list[Witness]:
    m = ls.domain.map
    out = []
    for x, y in ls.members:
        faces = _contact_faces(u, ls.domain, x, y, ls.lam, x_open)
        if faces:
            out.append(Witness(
                (m.x_grid.coord(x) + m.y_grid.coord(y),),
                (float(u.value(m, x, y)), float(ls.lam)),
                f"level set at lambda={ls.lam:.6g} reaches the sampled boundary ({','.join(faces)})",
            ))
    return out


def graph_closedness_violations(ls: LevelSet, delta: float, eps: float) -> list[Witness]:
    """Members (x', y') whose neighbour column x in the window has no image point within eps.

    Level sets on the graph are closed only if their limit points stay on the graph.
    """
    dom = ls.domain
    m = dom.map
    xs = set(dom.window.indices())
    out = []
    by_x: dict[Index, list[Index]] = {}
    for x, y in ls.members:
        by_x.setdefault(x, []).append(y)
    for xp, ys in by_x.items():
        yc = m.y_grid.coords(ys)
        for x in sorted(neighbors(m.x_grid, xp, delta)):
            if x not in xs:
                continue
            d = m.dist_to_image(yc, x)
            for k, y in enumerate(ys):
                if not within(d[k], eps):
                    out.append(Witness(
                        (m.x_grid.coord(x), m.x_grid.coord(xp) + m.y_grid.coord(y)),
                        (float(d[k]), float(ls.lam)),
                        f"level-set point is {d[k]:.6g} from Phi(x) at a neighbouring x (> eps)",
                    ))
    return out


def check_inf_compact(
    u: Objective,
    domain: GraphSample,
    lambdas: Sequence[float] | None = None,
    delta: float | None = None,
    eps_val: float = DEFAULT_EPS_VAL,
    *,
    eps: float | None = None,
    x_delta: float | None = None,
    x_open: bool = False,
    name: str = "inf_compact",
) -> CheckReport:
    """Compactness proxy for every level set of u on ``domain``.

    Boundedness: members reaching a truncated face of the sampled box warn.
    Closedness: u must pass the lsc check (radius ``delta`` in the product
    metric) and members must stay within ``eps`` of the image at every
    neighbouring x (radius ``x_delta``).  ``x_open`` treats the x-window edges
    as truncations too, for level sets over all of X rather than a compact K.
    """
    m = domain.map
    if lambdas is None:
        lambdas = default_lambdas(u, domain)
    lambdas = list(lambdas)
    if not lambdas:
        raise ValueError("lambda list must be nonempty")
    x_delta = default_delta(m.x_grid) if x_delta is None else x_delta
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    if delta is None:
        delta = 1.5 * max(m.x_grid.max_mesh, m.y_grid.max_mesh)
    lsc = check_function_lsc(u, domain, delta, eps_val)
    violations = list(lsc.witnesses) if lsc.status == "fail" else []
    contacts = []
    for lam in lambdas:
        ls = level_set(u, lam, domain)
        contacts += level_set_contacts(u, ls, x_open)
        violations += graph_closedness_violations(ls, x_delta, eps)
    tol = {"delta": delta, "eps": eps, "eps_val": eps_val, "lambdas": [float(l) for l in lambdas]}
    return make_report(name, violations, tol, {"points": len(domain.pairs), "levels": len(lambdas)},
                       warnings=contacts)


def check_k_inf_compact(
    u: Objective,
    m: SetValuedMap,
    windows: Sequence[CompactWindow] | None = None,
    lambdas: Sequence[float] | None = None,
    delta: float | None = None,
    eps_val: float = DEFAULT_EPS_VAL,
    *,
    eps: float | None = None,
    x_delta: float | None = None,
) -> CheckReport:
    """Inf-compactness of u on Gr_K(Phi) for every window K."""
    if windows is None:
        windows = [CompactWindow.full(m.x_grid)]
    if not windows:
        raise ValueError("window list must be nonempty")
    if lambdas is None:
        lambdas = default_lambdas(u, graph_sample(m, CompactWindow.full(m.x_grid)))
    parts = [
        check_inf_compact(u, graph_sample(m, w), lambdas, delta, eps_val, eps=eps, x_delta=x_delta)
        for w in windows
    ]
    tol = dict(parts[0].tolerances)
    tol["windows"] = len(windows)
    rep = merge_reports("k_inf_compact", parts, tol)
    rep.counters["windows_failed"] = sum(p.status == "fail" for p in parts)
    rep.counters["windows_warned"] = sum(p.status == "warn" for p in parts)
    return rep


def argmin_selector(u: Objective, m: SetValuedMap):
    def pick(x: Index, cands: Sequence[Index]) -> Index:
        return min(cands, key=lambda y: (u.value(m, x, y), y))
    return pick


def check_kn_inf_compact(
    u: Objective,
    m: SetValuedMap,
    paths: Sequence[SequencePath],
    lam: float,
    eps: float | None = None,
    selections_per_path: int = 4,
    seed: int = 0,
    *,
    delta: float | None = None,
    eps_val: float = DEFAULT_EPS_VAL,
) -> CheckReport:
    """KN-inf-compactness proxy at level ``lam``.

    Condition (i) is the lsc check on the full graph.  Condition (ii): along
    each path, selections are drawn from {y in Phi(x_k) : u(x_k, y) <= lam};
    indices with nothing admissible drop out, and at least a quarter of the
    remaining ones must lie within eps of Phi(limit).
    """
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    if eps <= 0:
        raise ValueError("eps must be positive")
    full = graph_sample(m, CompactWindow.full(m.x_grid))
    cond_i = check_function_lsc(u, full, delta, eps_val)
    violations = list(cond_i.witnesses) if cond_i.status == "fail" else []

    adm_cache: dict[Index, list[Index]] = {}

    def admissible(x: Index) -> list[Index]:
        if x not in adm_cache:
            adm_cache[x] = [y for y in sorted(m.image(x)) if u.value(m, x, y) <= lam]
        return adm_cache[x]

    pick = argmin_selector(u, m)
    examined = discarded = 0
    for pno, path in enumerate(paths):
        if not any(admissible(x) for x in path.points):
            discarded += 1
            continue
        rng = np.random.default_rng([seed, pno])
        for label, sel in selections(m, path, selections_per_path, rng, allowed=admissible, argmin=pick):
            examined += 1
            bad = accumulation_violation(m, path, sel, eps)
            if bad:
                got, need, _ = bad
                kept = sum(y is not None for y in sel)
                violations.append(_path_witness(
                    m, path, sel,
                    f"{label} selection at lambda={lam:.6g}: {got} of {kept} admissible indices "
                    f"within eps of Phi(limit), need {need}",
                ))
    tol = {"delta": cond_i.tolerances["delta"], "eps": eps, "eps_val": eps_val, "lambda": float(lam),
           "selections": selections_per_path}
    return make_report("kn_inf_compact", violations, tol,
                       {"paths": len(paths), "paths_discarded": discarded, "selections": examined})
