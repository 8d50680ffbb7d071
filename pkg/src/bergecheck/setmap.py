"""Feasibility multifunctions on lattices and their semicontinuity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import exprparse
from .errors import DomainError, EmptyImage
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
    neighbors,
    within,
)


@dataclass(frozen=True)
class ConstraintForm:
    """Phi(x) = {y on the y-grid : g_j(x, y) <= 0 for all j}."""

    constraints: tuple[exprparse.Expr, ...]


@dataclass(frozen=True)
class TabulatedForm:
    """Explicit image per x index, as sets of y indices."""

    table: Mapping[Index, frozenset[Index]]


@dataclass(eq=False)
class SetValuedMap:
    x_grid: GridSpace
    y_grid: GridSpace
    body: ConstraintForm | TabulatedForm
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_constraints(cls, x_grid: GridSpace, y_grid: GridSpace, texts: Sequence[str]) -> "SetValuedMap":
        asts = tuple(exprparse.parse(t, x_grid.dim, y_grid.dim) for t in texts)
        return cls(x_grid, y_grid, ConstraintForm(asts))

    @classmethod
    def from_table(cls, x_grid: GridSpace, y_grid: GridSpace, table: Mapping[Index, Sequence[Index]]) -> "SetValuedMap":
        return cls(x_grid, y_grid, TabulatedForm({tuple(k): frozenset(map(tuple, v)) for k, v in table.items()}))

    @classmethod
    def constant(cls, x_grid: GridSpace, y_grid: GridSpace, ys: Sequence[Index]) -> "SetValuedMap":
        s = frozenset(map(tuple, ys))
        return cls(x_grid, y_grid, TabulatedForm({x: s for x in x_grid.indices()}))

    @property
    def is_tabulated(self) -> bool:
        return isinstance(self.body, TabulatedForm)

    def feasible_at(self, x: Sequence[float], y: Sequence[float]) -> Optional[bool]:
        """Membership at arbitrary coordinates; None when the map is tabulated."""
        if self.is_tabulated:
            return None
        try:
            return all(exprparse.evaluate(g, x, y) <= 0 for g in self.body.constraints)
        except DomainError:
            return False

    def image(self, x: Index) -> frozenset[Index]:
        hit = self._cache.get(x)
        if hit is not None:
            return hit
        if not self.x_grid.contains(x):
            raise ValueError(f"{x} is not a point of the x-grid")
        if self.is_tabulated:
            ys = self.body.table.get(x, frozenset())
        else:
            xc = self.x_grid.coord(x)
            ys = frozenset(
                y for y in self.y_grid.indices()
                if all(exprparse.evaluate(g, xc, self.y_grid.coord(y)) <= 0 for g in self.body.constraints)
            )
        if not ys:
            raise EmptyImage(self.x_grid.coord(x))
        self._cache[x] = ys
        return ys

    def image_coords(self, x: Index) -> np.ndarray:
        key = ("coords", x)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.y_grid.coords(sorted(self.image(x)))
            self._cache[key] = hit
        return hit

    def dist_to_image(self, ys: np.ndarray, x: Index) -> np.ndarray:
        """Distance from each row of ``ys`` to the nearest point of Phi(x)."""
        target = self.image_coords(x)
        d = np.sqrt(((ys[:, None, :] - target[None, :, :]) ** 2).sum(axis=2))
        return d.min(axis=1)

    def touches_boundary(self, x: Index, y: Index) -> list[tuple[int, int]]:
        """Faces of the y-window at which the graph point (x, y) is a truncation.

        A face counts when the image would continue one mesh step outward;
        tabulated maps give no information past the window and always count.
        Closed y-grids have no truncation faces.
        """
        if self.y_grid.closed:
            return []
        faces = []
        for axis, direction in self.y_grid.on_boundary(y):
            out = self.y_grid.outward(y, axis, direction)
            if self.feasible_at(self.x_grid.coord(x), out) is not False:
                faces.append((axis, direction))
        return faces


@dataclass(frozen=True)
class GraphSample:
    """Gr_K(Phi) for a window K, enumerated in lexicographic (x, y) order."""

    map: SetValuedMap
    window: CompactWindow
    pairs: tuple[tuple[Index, Index], ...]

    def xs(self) -> list[Index]:
        return self.window.indices()


def image(m: SetValuedMap, x: Index) -> frozenset[Index]:
    return m.image(x)


def graph_sample(m: SetValuedMap, window: CompactWindow) -> GraphSample:
    if window.grid != m.x_grid:
        raise ValueError("window is not over the map's x-grid")
    pairs = tuple((x, y) for x in window.indices() for y in sorted(m.image(x)))
    return GraphSample(m, window, pairs)


def _pairs_in(m: SetValuedMap, xs: Sequence[Index], delta: float):
    xset = set(xs)
    for x in xs:
        for xp in sorted(neighbors(m.x_grid, x, delta)):
            if xp in xset:
                yield x, xp


def semidistance_violations(
    inner: SetValuedMap,
    delta: float,
    eps: float,
    xs: Sequence[Index],
    outer: Optional[Callable[[Index], np.ndarray]] = None,
    label: str = "y'",
) -> tuple[list[Witness], int]:
    """Witnesses (x, x', y') with y' in inner(x') farther than eps from outer(x).

    ``outer`` defaults to the image of ``inner`` itself.
    """
    out: list[Witness] = []
    examined = 0
    for x, xp in _pairs_in(inner, xs, delta):
        ys = inner.image_coords(xp)
        if outer is None:
            d = inner.dist_to_image(ys, x)
        else:
            target = outer(x)
            d = np.sqrt(((ys[:, None, :] - target[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        examined += len(ys)
        for k in np.flatnonzero([not within(v, eps) for v in d]):
            out.append(Witness(
                (inner.x_grid.coord(x), inner.x_grid.coord(xp), tuple(float(c) for c in ys[k])),
                (float(d[k]),),
                f"{label} in Phi(x') is {d[k]:.6g} from Phi(x) (> eps)",
            ))
    return out, examined


def check_map_lsc(m: SetValuedMap, delta: float | None = None, eps: float | None = None) -> CheckReport:
    """Every y in Phi(x) has a point of Phi(x') within eps, for x' near x."""
    delta = default_delta(m.x_grid) if delta is None else delta
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    if delta <= 0 or eps <= 0:
        raise ValueError("delta and eps must be positive")
    xs = m.x_grid.indices()
    violations = []
    examined = 0
    for x, xp in _pairs_in(m, xs, delta):
        ys = m.image_coords(x)
        d = m.dist_to_image(ys, xp)
        examined += len(ys)
        for k in range(len(ys)):
            if not within(d[k], eps):
                violations.append(Witness(
                    (m.x_grid.coord(x), m.x_grid.coord(xp), tuple(float(c) for c in ys[k])),
                    (float(d[k]),),
                    f"y in Phi(x) is {d[k]:.6g} from Phi(x') (> eps)",
                ))
    return make_report("map_lsc", violations, {"delta": delta, "eps": eps}, {"points": examined})


def check_map_usc(
    m: SetValuedMap,
    delta: float | None = None,
    eps: float | None = None,
    *,
    xs: Sequence[Index] | None = None,
    outer: Optional[Callable[[Index], np.ndarray]] = None,
    name: str = "map_usc",
) -> CheckReport:
    """One-sided Hausdorff semidistance from Phi(x') to Phi(x) is at most eps.

    ``outer`` replaces the reference image Phi(x) (rows of y coordinates);
    the solution-map conclusion uses it to compare against near-minimizers.
    """
    delta = default_delta(m.x_grid) if delta is None else delta
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    if delta <= 0 or eps <= 0:
        raise ValueError("delta and eps must be positive")
    xs = m.x_grid.indices() if xs is None else list(xs)
    violations, examined = semidistance_violations(m, delta, eps, xs, outer)
    return make_report(name, violations, {"delta": delta, "eps": eps}, {"points": examined})


def check_k_upper_semicompact(
    m: SetValuedMap,
    window: CompactWindow,
    delta: float | None = None,
    eps: float | None = None,
) -> CheckReport:
    """Compactness of Gr_K(Phi): boundary contact warns, a usc failure on K fails."""
    delta = default_delta(m.x_grid) if delta is None else delta
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    sample = graph_sample(m, window)
    contacts = []
    for x, y in sample.pairs:
        faces = m.touches_boundary(x, y)
        if faces:
            contacts.append(Witness(
                (m.x_grid.coord(x), m.y_grid.coord(y)),
                (),
                "graph touches the y-window boundary at faces " + ",".join(f"{a}{'+' if s > 0 else '-'}" for a, s in faces),
            ))
    usc = check_map_usc(m, delta, eps, xs=window.indices())
    return make_report(
        "k_upper_semicompact",
        list(usc.witnesses) if usc.status == "fail" else [],
        {"delta": delta, "eps": eps},
        {"points": len(sample.pairs)},
        warnings=contacts,
    )


def accumulation_count(dists: Sequence[float], eps: float) -> int:
    return sum(1 for d in dists if within(d, eps))


def threshold(n: int) -> int:
    """Indices that must sit near the limit image: a quarter of the sequence."""
    return math.ceil(n / 4)


def selections(
    m: SetValuedMap,
    path: SequencePath,
    count: int,
    rng: np.random.Generator,
    allowed: Callable[[Index], Sequence[Index]] | None = None,
    argmin: Callable[[Index, Sequence[Index]], Index] | None = None,
) -> list[tuple[str, list[Optional[Index]]]]:
    """Selections y_k in Phi(x_k) along ``path``.

    ``allowed`` filters each image (None entries mark indices with nothing
    admissible).  Always includes the selection farthest from Phi(limit), the
    argmin selection when ``argmin`` is given, then ``count`` uniform draws.
    """
    allowed = allowed or (lambda x: sorted(m.image(x)))
    cand = [list(allowed(x)) for x in path.points]
    limit_img = m.image_coords(path.limit)

    far = []
    for x, c in zip(path.points, cand):
        if not c:
            far.append(None)
            continue
        ys = m.y_grid.coords(c)
        d = np.sqrt(((ys[:, None, :] - limit_img[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
        far.append(c[int(np.argmax(d))])
    out = [("farthest", far)]
    if argmin is not None:
        out.append(("argmin", [argmin(x, c) if c else None for x, c in zip(path.points, cand)]))
    for j in range(count):
        out.append((f"random{j}", [c[int(rng.integers(len(c)))] if c else None for c in cand]))
    return out


def accumulation_violation(
    m: SetValuedMap,
    path: SequencePath,
    sel: Sequence[Optional[Index]],
    eps: float,
) -> Optional[tuple[int, int, list[float]]]:
    """(matches, needed, distances) when the selection fails the accumulation proxy."""
    idx = [k for k, y in enumerate(sel) if y is not None]
    if not idx:
        return None
    ys = m.y_grid.coords([sel[k] for k in idx])
    d = m.dist_to_image(ys, path.limit)
    got = accumulation_count(d, eps)
    need = threshold(len(idx))
    if got < need:
        return got, need, [float(v) for v in d]
    return None


def check_kn_upper_semicompact(
    m: SetValuedMap,
    paths: Sequence[SequencePath],
    eps: float | None = None,
    selections_per_path: int = 4,
    seed: int = 0,
    argmin: Callable[[Index, Sequence[Index]], Index] | None = None,
) -> CheckReport:
    """Finite accumulation proxy: along each path, at least a quarter of the
    selected y_k must lie within eps of Phi(limit)."""
    eps = default_eps(m.x_grid, m.y_grid) if eps is None else eps
    if eps <= 0:
        raise ValueError("eps must be positive")
    violations = []
    examined = 0
    for pno, path in enumerate(paths):
        rng = np.random.default_rng([seed, pno])
        for label, sel in selections(m, path, selections_per_path, rng, argmin=argmin):
            examined += 1
            bad = accumulation_violation(m, path, sel, eps)
            if bad:
                got, need, _ = bad
                violations.append(_path_witness(m, path, sel, f"{label} selection: {got} of {len(sel)} "
                                                            f"within eps of Phi(limit), need {need}"))
    return make_report("kn_upper_semicompact", violations, {"eps": eps, "selections": selections_per_path},
                       {"paths": len(paths), "selections": examined})


def _path_witness(m: SetValuedMap, path: SequencePath, sel, reason: str) -> Witness:
    pts = [m.x_grid.coord(path.limit)]
    for x, y in zip(path.points, sel):
        pts.append(m.x_grid.coord(x) + (m.y_grid.coord(y) if y is not None else ()))
    return Witness(tuple(pts), (), reason)
