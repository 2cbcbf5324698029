"""Planar domains rescaled to unit area, and their Cartesian grids.

Three shapes are supported: disks, axis-aligned rectangles and simple
polygons. Every geometric quantity the estimates consume (area, perimeter,
``ell``) is analytic; the raster grid is only used by the field solvers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import shapely
from scipy.spatial import cKDTree

from .errors import DomainError

MIN_RESOLUTION = 16
MIN_INTERIOR_NODES = 100
MIN_NODES_ACROSS = 3
# directions are ordered (+x, -x, +y, -y) everywhere
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


# ---------------------------------------------------------------- shapes

@dataclass(frozen=True)
class Disk:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    kind = "disk"

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def centroid(self) -> tuple[float, float]:
        return self.center

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return cx - r, cy - r, cx + r, cy + r

    def scaled(self, s: float) -> Disk:
        return Disk(self.radius * s, (self.center[0] * s, self.center[1] * s))

    def contains(self, x, y):
        cx, cy = self.center
        return (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 < self.radius**2

    def crossing(self, x, y, direction):
        """Distance from interior points to the boundary along an axis direction."""
        cx, cy = self.center
        x = np.asarray(x, float) - cx
        y = np.asarray(y, float) - cy
        dx, dy = direction
        r2 = self.radius**2
        if dx:
            half = np.sqrt(np.maximum(r2 - y * y, 0.0))
            return half - dx * x
        half = np.sqrt(np.maximum(r2 - x * x, 0.0))
        return half - dy * y

    def _quadrant_area(self, x, y):
        # area of the disk intersected with {X <= x, Y <= y}, centered coordinates
        R = self.radius
        x = np.clip(x, -R, R)
        y = np.clip(y, -R, R)

        def S(u):
            u = np.clip(u, -R, R)
            return 0.5 * (u * np.sqrt(np.maximum(R * R - u * u, 0.0)) + R * R * np.arcsin(u / R))

        def seg(a, b, yy):
            bb = np.maximum(np.minimum(b, x), a)
            if yy is None:
                return 2.0 * (S(bb) - S(a))
            return yy * (bb - a) + S(bb) - S(a)

        c = np.sqrt(np.maximum(R * R - y * y, 0.0))
        upper = seg(-R, -c, None) + seg(-c, c, y) + seg(c, R, None)
        lower = seg(-c, c, y)
        return np.where(y >= 0.0, upper, lower)

    def box_area(self, x0, y0, x1, y1):
        cx, cy = self.center
        x0, x1 = np.asarray(x0) - cx, np.asarray(x1) - cx
        y0, y1 = np.asarray(y0) - cy, np.asarray(y1) - cy
        q = self._quadrant_area
        a = q(x1, y1) - q(x0, y1) - q(x1, y0) + q(x0, y0)
        return np.maximum(a, 0.0)

    def to_dict(self) -> dict:
        return {"kind": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    kind = "rectangle"

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    @property
    def centroid(self) -> tuple[float, float]:
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.x0, self.y0, self.x1, self.y1

    def scaled(self, s: float) -> Rectangle:
        return Rectangle(self.x0 * s, self.y0 * s, self.x1 * s, self.y1 * s)

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (x > self.x0) & (x < self.x1) & (y > self.y0) & (y < self.y1)

    def crossing(self, x, y, direction):
        dx, dy = direction
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if dx > 0:
            return self.x1 - x
        if dx < 0:
            return x - self.x0
        if dy > 0:
            return self.y1 - y
        return y - self.y0

    def box_area(self, x0, y0, x1, y1):
        wx = np.clip(np.minimum(x1, self.x1) - np.maximum(x0, self.x0), 0.0, None)
        wy = np.clip(np.minimum(y1, self.y1) - np.maximum(y0, self.y0), 0.0, None)
        return wx * wy

    def to_dict(self) -> dict:
        return {"kind": "rectangle", "bounds": [self.x0, self.y0, self.x1, self.y1]}


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]

    kind = "polygon"

    def __post_init__(self):
        verts = [tuple(map(float, v)) for v in self.vertices]
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts = verts[:-1]
        object.__setattr__(self, "vertices", tuple(verts))

    @property
    def _array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def geometry(self) -> shapely.Polygon:
        return shapely.Polygon(self.vertices)

    @property
    def signed_area(self) -> float:
        v = self._array
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def area(self) -> float:
        return abs(self.signed_area)

    @property
    def perimeter(self) -> float:
        v = self._array
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    @property
    def centroid(self) -> tuple[float, float]:
        v = self._array
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * cross.sum()
        return float(((x + xn) * cross).sum() / (6 * a)), float(((y + yn) * cross).sum() / (6 * a))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        v = self._array
        return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())

    def scaled(self, s: float) -> Polygon:
        return Polygon(tuple((x * s, y * s) for x, y in self.vertices))

    def contains(self, x, y):
        return shapely.contains_xy(self.geometry, np.asarray(x, float), np.asarray(y, float))

    def crossing(self, x, y, direction):
        x = np.atleast_1d(np.asarray(x, float))
        y = np.atleast_1d(np.asarray(y, float))
        v = self._array
        a, b = v, np.roll(v, -1, axis=0)
        dx, dy = direction
        # swap coordinates so the ray always runs along the first axis
        if dx:
            px, py, s = x, y, dx
            ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
        else:
            px, py, s = y, x, dy
            ax, ay, bx, by = a[:, 1], a[:, 0], b[:, 1], b[:, 0]
        py_ = py[:, None]
        lo, hi = np.minimum(ay, by), np.maximum(ay, by)
        hit = (py_ >= lo) & (py_ <= hi) & (ay != by)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = ax + (py_ - ay) * (bx - ax) / (by - ay)
        dist = s * (xi - px[:, None])
        dist = np.where(hit & (dist > 0.0), dist, np.inf)
        return dist.min(axis=1)

    def box_area(self, x0, y0, x1, y1):
        boxes = shapely.box(x0, y0, x1, y1)
        return shapely.area(shapely.intersection(boxes, self.geometry))

    def to_dict(self) -> dict:
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}


# ---------------------------------------------------------------- spec

@dataclass(frozen=True)
class DomainSpec:
    """User-facing description of a domain before normalization.

    ``rectangle`` with ``aspect=a`` means the raw box ``[0, a] x [0, 1]``;
    ``disk`` is centered at the origin with the given ``radius``.
    """

    shape: str
    n: int = 64
    aspect: float | None = None
    vertices: tuple[tuple[float, float], ...] | None = None
    radius: float = 1.0

    def __post_init__(self):
        if self.shape not in ("disk", "rectangle", "polygon"):
            raise DomainError(f"unknown shape {self.shape!r}")
        if int(self.n) != self.n or self.n < MIN_RESOLUTION:
            raise DomainError(f"resolution n must be an integer >= {MIN_RESOLUTION}, got {self.n}")
        if self.shape == "rectangle":
            if self.aspect is None or not self.aspect > 0:
                raise DomainError("rectangle needs a positive aspect")
        if self.shape == "disk" and not self.radius > 0:
            raise DomainError("disk radius must be positive")
        if self.shape == "polygon":
            if not self.vertices or len(self.vertices) < 3:
                raise DomainError("polygon needs at least 3 vertices")
            verts = tuple(tuple(map(float, v)) for v in self.vertices)
            object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_dict(cls, d: dict) -> DomainSpec:
        verts = d.get("vertices")
        return cls(
            shape=d["shape"],
            n=int(d.get("n", 64)),
            aspect=None if d.get("aspect") is None else float(d["aspect"]),
            vertices=None if verts is None else tuple(tuple(v) for v in verts),
            radius=float(d.get("radius", 1.0)),
        )

    def to_dict(self) -> dict:
        d = {"shape": self.shape, "n": self.n}
        if self.aspect is not None:
            d["aspect"] = self.aspect
        if self.vertices is not None:
            d["vertices"] = [list(v) for v in self.vertices]
        if self.shape == "disk" and self.radius != 1.0:
            d["radius"] = self.radius
        return d

    @classmethod
    def from_json(cls, path: str | Path) -> DomainSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def raw_shape(self):
        if self.shape == "disk":
            return Disk(self.radius)
        if self.shape == "rectangle":
            return Rectangle(0.0, 0.0, float(self.aspect), 1.0)
        poly = Polygon(self.vertices)
        geom = poly.geometry
        if not geom.is_valid or not geom.is_simple:
            raise DomainError("polygon must be simple (non-self-intersecting)")
        if poly.area <= 1e-14:
            raise DomainError(f"degenerate polygon: area {poly.area:.3e}")
        return poly


def disk(n: int = 64) -> DomainSpec:
    return DomainSpec("disk", n=n)


def square(n: int = 64) -> DomainSpec:
    return DomainSpec("rectangle", n=n, aspect=1.0)


def rectangle(aspect: float, n: int = 64) -> DomainSpec:
    return DomainSpec("rectangle", n=n, aspect=aspect)


# ---------------------------------------------------------------- grid

@dataclass(frozen=True, eq=False)
class Grid:
    """Interior nodes of a uniform lattice anchored at the shape centroid.

    ``weights`` are control-volume areas: each interior node owns the part of
    its ``h x h`` box inside the shape, plus a share of the boxes of exterior
    neighbours, so that the weights tile the shape and sum to its area.
    ``arms[i, d]`` is the distance to the next node in direction ``d`` or to
    the boundary crossing when that node lies outside (then ``nbr[i, d] = -1``).
    """

    h: float
    origin: tuple[float, float]
    ij: np.ndarray
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    nbr: np.ndarray
    arms: np.ndarray
    index_offset: tuple[int, int]
    lattice_shape: tuple[int, int]

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def mask(self) -> np.ndarray:
        """Boolean lattice mask, indexed ``[row (y), column (x)]``."""
        m = np.zeros(self.lattice_shape, dtype=bool)
        i0, j0 = self.index_offset
        m[self.ij[:, 1] - j0, self.ij[:, 0] - i0] = True
        return m

    @property
    def cut(self) -> np.ndarray:
        """Nodes with at least one arm ending on the boundary."""
        return (self.nbr < 0).any(axis=1)

    def nearest_node(self, point) -> int:
        px, py = point
        i = int(round((px - self.origin[0]) / self.h))
        j = int(round((py - self.origin[1]) / self.h))
        hit = np.flatnonzero((self.ij[:, 0] == i) & (self.ij[:, 1] == j))
        if hit.size == 0:
            raise DomainError(f"point {point} has no interior grid node")
        return int(hit[0])


def _lattice(shape, h: float, origin):
    xmin, ymin, xmax, ymax = shape.bounds
    cx, cy = origin
    i0 = math.floor((xmin - cx) / h) - 1
    i1 = math.ceil((xmax - cx) / h) + 1
    j0 = math.floor((ymin - cy) / h) - 1
    j1 = math.ceil((ymax - cy) / h) + 1
    I, J = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1))
    return I, J, (i0, j0)


def discretize(shape, n: int) -> Grid:
    """Build the interior-node grid of spacing ``1/n`` for a (normalized) shape."""
    h = 1.0 / n
    origin = tuple(map(float, shape.centroid))
    I, J, (i0, j0) = _lattice(shape, h, origin)
    X = origin[0] + I * h
    Y = origin[1] + J * h
    inside = np.asarray(shape.contains(X, Y), dtype=bool)
    count = int(inside.sum())
    if count < MIN_INTERIOR_NODES:
        raise DomainError(f"resolution too coarse: {count} interior nodes (< {MIN_INTERIOR_NODES})")
    across = min(int(inside.sum(axis=0).max()), int(inside.sum(axis=1).max()))
    if across < MIN_NODES_ACROSS:
        raise DomainError(
            f"resolution too coarse: only {across} interior node(s) across the short side"
        )

    rows, cols = inside.shape
    index = -np.ones(inside.shape, dtype=np.int64)
    index[inside] = np.arange(count)
    jj, ii = np.nonzero(inside)
    x, y = X[jj, ii], Y[jj, ii]

    nbr = -np.ones((count, 4), dtype=np.int64)
    arms = np.full((count, 4), h)
    for d, (dx, dy) in enumerate(DIRECTIONS):
        # lattice has a one-node margin, so neighbours never leave the array
        k = index[jj + dy, ii + dx]
        nbr[:, d] = k
        cut = k < 0
        if cut.any():
            a = np.asarray(shape.crossing(x[cut], y[cut], (dx, dy)), dtype=float)
            arms[cut, d] = np.clip(a, 1e-8 * h, h)

    # control-volume weights
    half = 0.5 * h
    areas = np.asarray(shape.box_area(X - half, Y - half, X + half, Y + half), dtype=float)
    weights = areas[inside].copy()
    orphans = np.argwhere(~inside & (areas > 0.0))
    tree = None
    for j, i in orphans:
        a = areas[j, i]
        share = [index[j + dy, i + dx] for dx, dy in DIRECTIONS if 0 <= j + dy < rows and 0 <= i + dx < cols]
        share = [k for k in share if k >= 0]
        if not share:
            diag = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            share = [index[j + dy, i + dx] for dx, dy in diag if 0 <= j + dy < rows and 0 <= i + dx < cols]
            share = [k for k in share if k >= 0]
        if not share:
            if tree is None:
                tree = cKDTree(np.column_stack([x, y]))
            share = [int(tree.query([X[j, i], Y[j, i]])[1])]
        weights[share] += a / len(share)

    total = weights.sum()
    if abs(total - shape.area) > 1e-9 * shape.area:
        raise DomainError(f"control volumes do not tile the shape: {total} vs {shape.area}")
    weights *= shape.area / total

    return Grid(
        h=h,
        origin=origin,
        ij=np.column_stack([ii + i0, jj + j0]),
        x=x,
        y=y,
        weights=weights,
        nbr=nbr,
        arms=arms,
        index_offset=(i0, j0),
        lattice_shape=inside.shape,
    )


# ---------------------------------------------------------------- domain

@dataclass(frozen=True, eq=False)
class Domain:
    """A unit-area domain together with its grid at resolution ``n``."""

    spec: DomainSpec
    shape: object
    grid: Grid = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def area(self) -> float:
        return self.shape.area

    @property
    def perimeter(self) -> float:
        return self.shape.perimeter

    @property
    def ell(self) -> float:
        return ell(self)

    @property
    def centroid(self) -> tuple[float, float]:
        return self.shape.centroid

    @property
    def is_disk(self) -> bool:
        return self.shape.kind == "disk"

    @property
    def tag(self) -> str:
        s = self.spec
        if s.shape == "disk":
            return "disk"
        if s.shape == "rectangle":
            return "square" if s.aspect == 1.0 else f"rectangle{s.aspect:g}"
        return f"polygon{len(s.vertices)}"

    def with_resolution(self, n: int) -> Domain:
        return normalize(replace(self.spec, n=n))


def normalize(spec: DomainSpec | Domain) -> Domain:
    """Rescale about the origin to unit area and grid the result."""
    if isinstance(spec, Domain):
        spec = spec.spec
    raw = spec.raw_shape()
    area = raw.area
    if area <= 0:
        raise DomainError(f"degenerate domain: area {area:.3e}")
    s = 1.0 if abs(area - 1.0) < 1e-14 else 1.0 / math.sqrt(area)
    shape = raw.scaled(s)
    return Domain(spec=spec, shape=shape, grid=discretize(shape, spec.n))


def ell(domain: Domain) -> float:
    """Isoperimetric quantity ``|dOmega|^2 / (2 pi) - 1`` from the analytic perimeter."""
    return domain.perimeter**2 / (2.0 * math.pi) - 1.0
