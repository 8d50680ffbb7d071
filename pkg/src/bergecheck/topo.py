"""Lattice stand-ins for metric spaces, compact windows, convergent sequences,
and the report type every checker returns.

Grid points are addressed by integer index tuples; ``GridSpace.coord`` maps an
index to its coordinates.  All grids are metrizable, so finite sequences are
used wherever the definitions speak of nets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InvalidWindow

Index = tuple[int, ...]

# Relative slack on every "distance <= radius" comparison; lattice coordinates
# carry rounding from lo + i*h.
REL_SLACK = 1e-9

MAX_WITNESSES = 50


def within(d: float, r: float) -> bool:
    return d <= r * (1.0 + REL_SLACK) + 1e-15


@dataclass(frozen=True)
class GridSpace:
    """Uniform lattice on an axis-aligned box with the Euclidean metric.

    ``closed`` declares that the box is the whole space; boundary faces are
    then genuine and never count as truncation of a larger space.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    counts: tuple[int, ...]
    closed: bool = False

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.counts)) or not self.counts:
            raise InvalidWindow("windows and counts must have the same nonzero length")
        for k, (a, b, m) in enumerate(zip(self.lo, self.hi, self.counts)):
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise InvalidWindow(f"axis {k}: need lo < hi, got [{a}, {b}]")
            if m < 2:
                raise InvalidWindow(f"axis {k}: need at least 2 points, got {m}")
        axes = tuple(np.linspace(a, b, m) for a, b, m in zip(self.lo, self.hi, self.counts))
        object.__setattr__(self, "_axes", axes)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def mesh(self) -> tuple[float, ...]:
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.lo, self.hi, self.counts))

    @property
    def max_mesh(self) -> float:
        return max(self.mesh)

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    def indices(self) -> list[Index]:
        """All lattice indices in lexicographic order."""
        return list(itertools.product(*(range(m) for m in self.counts)))

    def contains(self, idx: Index) -> bool:
        return len(idx) == self.dim and all(0 <= i < m for i, m in zip(idx, self.counts))

    def coord(self, idx: Index) -> tuple[float, ...]:
        return tuple(float(ax[i]) for ax, i in zip(self._axes, idx))

    def coords(self, idxs: Iterable[Index]) -> np.ndarray:
        rows = [self.coord(i) for i in idxs]
        return np.asarray(rows, dtype=float).reshape(len(rows), self.dim)

    def points(self) -> list[tuple[float, ...]]:
        return [self.coord(i) for i in self.indices()]

    def index_of(self, point: Sequence[float]) -> Index:
        """Index of the lattice point nearest to ``point`` (clamped to the box)."""
        out = []
        for a, h, m, p in zip(self.lo, self.mesh, self.counts, point):
            out.append(min(m - 1, max(0, int(round((p - a) / h)))))
        return tuple(out)

    def dist(self, a: Index, b: Index) -> float:
        return math.sqrt(sum(((i - j) * h) ** 2 for i, j, h in zip(a, b, self.mesh)))

    def on_boundary(self, idx: Index) -> list[tuple[int, int]]:
        """Boundary faces touched by ``idx`` as (axis, outward direction) pairs."""
        faces = []
        for k, (i, m) in enumerate(zip(idx, self.counts)):
            if i == 0:
                faces.append((k, -1))
            if i == m - 1:
                faces.append((k, +1))
        return faces

    def outward(self, idx: Index, axis: int, direction: int) -> tuple[float, ...]:
        """Coordinates one mesh step outside the box across the given face."""
        c = list(self.coord(idx))
        c[axis] += direction * self.mesh[axis]
        return tuple(c)

    def refine(self, factor: int) -> "GridSpace":
        return GridSpace(self.lo, self.hi, tuple((m - 1) * factor + 1 for m in self.counts), self.closed)


def build_grid(windows: Sequence[Sequence[float]], counts: Sequence[int], closed: bool = False) -> GridSpace:
    if len(windows) != len(counts):
        raise InvalidWindow("windows and counts differ in length")
    for w in windows:
        if len(w) != 2:
            raise InvalidWindow(f"window {w!r} is not a [lo, hi] pair")
    return GridSpace(
        tuple(float(w[0]) for w in windows),
        tuple(float(w[1]) for w in windows),
        tuple(int(m) for m in counts),
        closed,
    )


def default_delta(grid: GridSpace) -> float:
    """1.5 mesh widths: catches axis and diagonal neighbours in 1-D and 2-D."""
    return 1.5 * grid.max_mesh


def default_eps(x_grid: GridSpace, y_grid: GridSpace) -> float:
    return 1.5 * max(x_grid.max_mesh, y_grid.max_mesh)


def neighbors(grid: GridSpace, p: Index, delta: float) -> frozenset[Index]:
    """Grid points q != p with d(p, q) <= delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not grid.contains(p):
        raise ValueError(f"{p} is not a point of the grid")
    reach = [int(math.floor(delta * (1 + REL_SLACK) / h)) for h in grid.mesh]
    out = set()
    ranges = [range(max(0, i - r), min(m, i + r + 1)) for i, r, m in zip(p, reach, grid.counts)]
    for q in itertools.product(*ranges):
        if q != p and within(grid.dist(p, q), delta):
            out.add(q)
    return frozenset(out)


@dataclass(frozen=True)
class CompactWindow:
    """Sub-box of a grid given by inclusive index ranges per axis."""

    grid: GridSpace
    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.ranges) != self.grid.dim:
            raise InvalidWindow("window rank differs from grid dimension")
        for k, (a, b) in enumerate(self.ranges):
            if not (0 <= a <= b < self.grid.counts[k]):
                raise InvalidWindow(f"axis {k}: range [{a}, {b}] outside grid or empty")

    @classmethod
    def full(cls, grid: GridSpace) -> "CompactWindow":
        return cls(grid, tuple((0, m - 1) for m in grid.counts))

    @classmethod
    def single(cls, grid: GridSpace, idx: Index) -> "CompactWindow":
        return cls(grid, tuple((i, i) for i in idx))

    @classmethod
    def from_box(cls, grid: GridSpace, box: Sequence[Sequence[float]]) -> "CompactWindow":
        """Smallest index window covering the lattice points inside ``box``."""
        ranges = []
        for k, (a, b) in enumerate(box):
            ax = grid._axes[k]
            tol = REL_SLACK * max(1.0, abs(a), abs(b))
            inside = [i for i, v in enumerate(ax) if a - tol <= v <= b + tol]
            if not inside:
                raise InvalidWindow(f"axis {k}: box [{a}, {b}] contains no lattice point")
            ranges.append((inside[0], inside[-1]))
        return cls(grid, tuple(ranges))

    def indices(self) -> list[Index]:
        return list(itertools.product(*(range(a, b + 1) for a, b in self.ranges)))

    def contains(self, idx: Index) -> bool:
        return all(a <= i <= b for i, (a, b) in zip(idx, self.ranges))

    def is_subwindow_of(self, other: "CompactWindow") -> bool:
        return all(a2 <= a1 and b1 <= b2 for (a1, b1), (a2, b2) in zip(self.ranges, other.ranges))


@dataclass(frozen=True)
class SequencePath:
    """Finite sequence x_1..x_L approaching ``limit`` with nonincreasing distance."""

    grid: GridSpace
    points: tuple[Index, ...]
    limit: Index

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a path needs at least 2 points")
        d = [self.grid.dist(p, self.limit) for p in self.points]
        for a, b in zip(d, d[1:]):
            if b > a * (1 + REL_SLACK) + 1e-15:
                raise ValueError("distances to the limit must be nonincreasing")
        if not within(d[-1], self.grid.max_mesh):
            raise ValueError("final point must be within one mesh width of the limit")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_constant(self) -> bool:
        return all(p == self.limit for p in self.points)


def generate_paths(
    grid: GridSpace,
    limit: Index,
    length: int,
    count: int,
    seed: int,
    reach: int = 1,
) -> list[SequencePath]:
    """Seeded sample of sequences converging to ``limit``.

    The constant path comes first, then one approach per available axis
    direction, then random lattice sequences drawn from the Chebyshev ball of
    radius ``reach`` cells, sorted by decreasing distance.  Every path ends at
    the limit.  At most ``count`` paths are returned.
    """
    if length < 2:
        raise ValueError("path length must be at least 2")
    if count < 1:
        raise ValueError("count must be at least 1")
    paths = [SequencePath(grid, (limit,) * length, limit)]
    for axis in range(grid.dim):
        for step in (-1, 1):
            q = list(limit)
            q[axis] += step * reach
            q = tuple(q)
            if grid.contains(q) and len(paths) < count:
                # walk in from `reach` cells out, one cell at a time, then sit at the limit
                pts = []
                for k in range(length - 1):
                    off = max(reach - k, 1)
                    r = list(limit)
                    r[axis] += step * off
                    pts.append(tuple(r))
                pts.append(limit)
                paths.append(SequencePath(grid, tuple(pts), limit))
    ball = [
        q
        for q in itertools.product(*(range(i - reach, i + reach + 1) for i in limit))
        if q != limit and grid.contains(q)
    ]
    rng = np.random.default_rng([seed, *limit])
    while len(paths) < count and ball:
        picks = [ball[j] for j in rng.integers(0, len(ball), size=length - 1)]
        picks.sort(key=lambda q: (-grid.dist(q, limit), q))
        paths.append(SequencePath(grid, tuple(picks) + (limit,), limit))
    return paths[:count]


def exhaustive_paths(window: CompactWindow, delta: float, length: int = 8) -> list[SequencePath]:
    """Constant path plus one stationary approach (x', ..., x', x) per neighbour.

    Covers every ordered neighbour pair inside the window; on a lattice this
    is the complete set of one-step convergence patterns at radius ``delta``.
    """
    grid = window.grid
    out = []
    for x in window.indices():
        out.append(SequencePath(grid, (x,) * length, x))
        for xp in sorted(neighbors(grid, x, delta)):
            if window.contains(xp):
                out.append(SequencePath(grid, (xp,) * (length - 1) + (x,), x))
    return out


# ------------------------------------------------------------------ reports

STATUSES = ("pass", "warn", "fail")


def worst(statuses: Iterable[str]) -> str:
    rank = {s: i for i, s in enumerate(STATUSES)}
    return max(statuses, key=lambda s: rank[s], default="pass")


@dataclass(frozen=True)
class Witness:
    points: tuple[tuple[float, ...], ...]
    values: tuple[float, ...]
    reason: str

    def sort_key(self):
        return (self.points, self.reason, self.values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "points": [list(p) for p in self.points],
            "values": [encode_float(v) for v in self.values],
            "reason": self.reason,
        }


def encode_float(v: float) -> float | str:
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return float(v)


def decode_float(v: float | str) -> float:
    if v == "+inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


@dataclass
class CheckReport:
    name: str
    status: str
    tolerances: dict[str, Any] = field(default_factory=dict)
    witnesses: list[Witness] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "fail" and not self.witnesses:
            raise ValueError(f"{self.name}: fail status needs a witness")
        if self.status == "pass" and self.witnesses:
            raise ValueError(f"{self.name}: pass status cannot carry witnesses")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "check": self.name,
            "status": self.status,
            "tolerances": {k: _encode_tol(v) for k, v in self.tolerances.items()},
            "witnesses": [w.to_dict() for w in self.witnesses],
            "counters": dict(self.counters),
        }


def _encode_tol(v):
    if isinstance(v, (list, tuple)):
        return [_encode_tol(t) for t in v]
    if isinstance(v, float):
        return encode_float(v)
    return v


def make_report(
    name: str,
    violations: list[Witness],
    tolerances: dict[str, Any],
    counters: dict[str, int],
    warnings: Sequence[Witness] = (),
) -> CheckReport:
    """Assemble a report: any violation fails, else any warning warns.

    Witnesses are sorted by point coordinates and truncated to MAX_WITNESSES;
    the untruncated totals go into the counters.
    """
    counters = dict(counters)
    counters["violations"] = len(violations)
    counters["warnings"] = len(warnings)
    if violations:
        status, shown = "fail", violations
    elif warnings:
        status, shown = "warn", list(warnings)
    else:
        status, shown = "pass", []
    shown = sorted(set(shown), key=Witness.sort_key)[:MAX_WITNESSES]
    return CheckReport(name, status, dict(tolerances), shown, counters)


def merge_reports(name: str, parts: Sequence[CheckReport], tolerances: dict[str, Any]) -> CheckReport:
    status = worst(p.status for p in parts)
    counters: dict[str, int] = {}
    for p in parts:
        for k, v in p.counters.items():
            counters[k] = counters.get(k, 0) + v
    if status == "pass":
        shown = []
    else:
        shown = [w for p in parts if p.status == status for w in p.witnesses]
        shown = sorted(set(shown), key=Witness.sort_key)[:MAX_WITNESSES]
    return CheckReport(name, status, dict(tolerances), shown, counters)
