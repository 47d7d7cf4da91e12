"""Single primitive object synthesis.

A primitive object is a stack of 2D slices along z. A base cross-section
shape (ellipse or star-shaped polygon) is drawn once per object and each
slice rasterizes that shape scaled by a piecewise-linear similarity-ratio
profile evaluated at the slice height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Union

import numpy as np

if TYPE_CHECKING:
    from .assembly import GenConfig

R_MIN = 15.0
R_MAX_LOW = 30.0
R_MAX_HIGH = 80.0
Z_MAX_LOW = 10
Z_MAX_HIGH = 50

# Fixed parameter set used when instance augmentation is disabled:
# midpoints of the sampled ranges.
FIXED_Z_MAX = 30
FIXED_Z_C = 15
FIXED_R_MAX = 55.0
FIXED_CONCAVE = (0.9, 0.35, 0.9)
FIXED_CONVEX = (0.35, 0.9, 0.35)


class XyRule(Enum):
    """Cross-section shape family: ellipse or w-gon, w in 3..9."""

    ELLIPSE = "ellipse"
    POLY3 = "3-poly"
    POLY4 = "4-poly"
    POLY5 = "5-poly"
    POLY6 = "6-poly"
    POLY7 = "7-poly"
    POLY8 = "8-poly"
    POLY9 = "9-poly"

    @property
    def vertex_count(self) -> int | None:
        """Number of polygon vertices, or None for the ellipse."""
        if self is XyRule.ELLIPSE:
            return None
        return int(self.value.split("-")[0])

    @property
    def index(self) -> int:
        return _XY_ORDER.index(self)


class ZRule(Enum):
    """Similarity-ratio profile family along z."""

    CONCAVE = "concave"
    CONVEX = "convex"
    PILLAR = "pillar"
    CONE = "cone"

    @property
    def index(self) -> int:
        return _Z_ORDER.index(self)


_XY_ORDER = (
    XyRule.ELLIPSE,
    XyRule.POLY3,
    XyRule.POLY4,
    XyRule.POLY5,
    XyRule.POLY6,
    XyRule.POLY7,
    XyRule.POLY8,
    XyRule.POLY9,
)
_Z_ORDER = (ZRule.CONCAVE, ZRule.CONVEX, ZRule.PILLAR, ZRule.CONE)


@dataclass(frozen=True)
class ShapeClass:
    """One of the 32 (xy rule, z rule) combinations."""

    xy: XyRule
    z: ZRule

    @property
    def class_id(self) -> int:
        return self.z.index * 8 + self.xy.index

    @classmethod
    def from_id(cls, class_id: int) -> "ShapeClass":
        if not 0 <= class_id <= 31:
            raise ValueError(f"class_id {class_id} out of range [0, 31]")
        return cls(xy=_XY_ORDER[class_id % 8], z=_Z_ORDER[class_id // 8])


ALL_CLASSES = tuple(ShapeClass.from_id(i) for i in range(32))


@dataclass(frozen=True)
class ProfileParams:
    """Parameters of the piecewise-linear similarity-ratio profile."""

    o1: float
    o2: float
    o3: float
    z_c: int
    z_max: int


@dataclass(frozen=True)
class EllipseShape:
    a: float
    b: float


@dataclass(frozen=True)
class PolygonShape:
    """Vertices in polar-sampled order, star-shaped about the origin."""

    vertices: tuple[tuple[float, float], ...]


SliceShape = Union[EllipseShape, PolygonShape]


@dataclass
class PrimitiveObject:
    """Rasterized occupancy grid in local coordinates, axes (x, y, z)."""

    occupancy: np.ndarray
    shape_class: ShapeClass
    params: ProfileParams
    base_shape: SliceShape
    r_max: float
    volume: int

    @property
    def half_extent(self) -> int:
        return (self.occupancy.shape[0] - 1) // 2


def sample_profile_params(
    z_rule: ZRule, ia_enabled: bool, rng: np.random.Generator
) -> ProfileParams:
    """Draw the profile parameters for one object.

    With instance augmentation off, the fixed midpoint parameter set is
    returned and the stream is not consumed.
    """
    if ia_enabled:
        z_max = int(rng.integers(Z_MAX_LOW, Z_MAX_HIGH + 1))
        z_c = int(rng.integers(3, z_max - 3 + 1))
    else:
        z_max = FIXED_Z_MAX
        z_c = FIXED_Z_C

    if z_rule is ZRule.PILLAR:
        o1, o2, o3 = 1.0, 1.0, 1.0
    elif z_rule is ZRule.CONE:
        o1, o2, o3 = 0.0, z_c / z_max, 1.0
    elif z_rule is ZRule.CONCAVE:
        if ia_enabled:
            o1 = rng.uniform(0.8, 1.0)
            o2 = rng.uniform(0.2, 0.5)
            o3 = rng.uniform(0.8, 1.0)
        else:
            o1, o2, o3 = FIXED_CONCAVE
    elif z_rule is ZRule.CONVEX:
        if ia_enabled:
            o1 = rng.uniform(0.2, 0.5)
            o2 = rng.uniform(0.8, 1.0)
            o3 = rng.uniform(0.2, 0.5)
        else:
            o1, o2, o3 = FIXED_CONVEX
    else:  # pragma: no cover
        raise ValueError(f"unknown z rule {z_rule}")

    return ProfileParams(o1=o1, o2=o2, o3=o3, z_c=z_c, z_max=z_max)


def similarity_ratio(params: ProfileParams, z: int | float) -> float:
    """Evaluate the piecewise-linear scale profile at height z.

    Segment endpoints (z=0, z=z_c, z=z_max) return o1/o2/o3 exactly;
    the two linear branches meet at z_c by construction.
    """
    if not 0 <= z <= params.z_max:
        raise ValueError(f"z={z} outside [0, {params.z_max}]")
    if z <= params.z_c:
        if z == params.z_c:
            return params.o2
        return params.o1 + (params.o2 - params.o1) * (z / params.z_c)
    if z == params.z_max:
        return params.o3
    return params.o2 + (params.o3 - params.o2) * (
        (z - params.z_c) / (params.z_max - params.z_c)
    )


def sample_xy_shape(
    xy_rule: XyRule, r_max: float, rng: np.random.Generator
) -> SliceShape:
    """Draw one base cross-section shape.

    Polygon vertex k gets a radius in [R_MIN, r_max] and an angle in the
    k-th of C equal sectors, so vertices come out sorted by angle and the
    edge loop is simple.
    """
    if r_max < R_MIN:
        raise ValueError(f"r_max={r_max} below R_min={R_MIN}")
    if xy_rule is XyRule.ELLIPSE:
        a = rng.uniform(R_MIN, r_max)
        b = rng.uniform(R_MIN, r_max)
        return EllipseShape(a=a, b=b)
    c = xy_rule.vertex_count
    verts = []
    for k in range(c):
        r_k = rng.uniform(R_MIN, r_max)
        theta_k = rng.uniform(2 * k * math.pi / c, 2 * (k + 1) * math.pi / c)
        verts.append((r_k * math.cos(theta_k), r_k * math.sin(theta_k)))
    return PolygonShape(vertices=tuple(verts))


def fixed_xy_shape(xy_rule: XyRule, r_max: float = FIXED_R_MAX) -> SliceShape:
    """The deterministic cross-section used when instance augmentation is off.

    Radii at the midpoint of [R_MIN, r_max], polygon angles at sector
    midpoints.
    """
    radius = (R_MIN + r_max) / 2.0
    if xy_rule is XyRule.ELLIPSE:
        return EllipseShape(a=radius, b=radius)
    c = xy_rule.vertex_count
    verts = []
    for k in range(c):
        theta_k = (2 * k + 1) * math.pi / c
        verts.append((radius * math.cos(theta_k), radius * math.sin(theta_k)))
    return PolygonShape(vertices=tuple(verts))


def rasterize_slice(
    shape: SliceShape, scale: float, half_extent: int
) -> np.ndarray:
    """Rasterize the scaled shape onto a (2h+1)^2 boolean grid.

    A pixel is set iff its center (integer offsets from the grid center)
    lies inside or on the scaled closed shape. Polygons use the even-odd
    ray-casting rule with on-edge points counted inside. scale=0 yields
    the empty grid.
    """
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    side = 2 * half_extent + 1
    grid = np.zeros((side, side), dtype=bool)
    if scale == 0:
        return grid

    if isinstance(shape, EllipseShape):
        sa = shape.a * scale
        sb = shape.b * scale
        x0 = max(-half_extent, -int(math.floor(sa)))
        x1 = min(half_extent, int(math.floor(sa)))
        y0 = max(-half_extent, -int(math.floor(sb)))
        y1 = min(half_extent, int(math.floor(sb)))
        if x0 > x1 or y0 > y1:
            # centre pixel may still satisfy the inequality
            x0, x1, y0, y1 = 0, 0, 0, 0
        xs = np.arange(x0, x1 + 1, dtype=np.float64)
        ys = np.arange(y0, y1 + 1, dtype=np.float64)
        xx = xs[:, None]
        yy = ys[None, :]
        inside = xx * xx / (sa * sa) + yy * yy / (sb * sb) <= 1.0
        grid[x0 + half_extent : x1 + half_extent + 1,
             y0 + half_extent : y1 + half_extent + 1] = inside
        return grid

    verts = np.asarray(shape.vertices, dtype=np.float64) * scale
    x0 = max(-half_extent, int(math.ceil(verts[:, 0].min())))
    x1 = min(half_extent, int(math.floor(verts[:, 0].max())))
    y0 = max(-half_extent, int(math.ceil(verts[:, 1].min())))
    y1 = min(half_extent, int(math.floor(verts[:, 1].max())))
    if x0 > x1 or y0 > y1:
        return grid
    xs = np.arange(x0, x1 + 1, dtype=np.float64)[:, None]
    ys = np.arange(y0, y1 + 1, dtype=np.float64)[None, :]

    inside = np.zeros((x1 - x0 + 1, y1 - y0 + 1), dtype=bool)
    on_edge = np.zeros_like(inside)
    n = len(verts)
    for k in range(n):
        ax, ay = verts[k]
        bx, by = verts[(k + 1) % n]
        # even-odd crossing of the rightward ray from each pixel centre
        straddles = (ay > ys) != (by > ys)
        if straddles.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                x_cross = (bx - ax) * (ys - ay) / (by - ay) + ax
            inside ^= straddles & (xs < x_cross)
        # on-edge points count as inside
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        on_seg = (
            (cross == 0.0)
            & (xs >= min(ax, bx)) & (xs <= max(ax, bx))
            & (ys >= min(ay, by)) & (ys <= max(ay, by))
        )
        on_edge |= on_seg

    grid[x0 + half_extent : x1 + half_extent + 1,
         y0 + half_extent : y1 + half_extent + 1] = inside | on_edge
    return grid


def build_primitive(
    shape_class: ShapeClass, config: "GenConfig", rng: np.random.Generator
) -> PrimitiveObject:
    """Sample parameters and rasterize one primitive object.

    Draw order is fixed (profile params, r_max, base shape) so the result
    is a pure function of the stream state. In planar mode the object is
    a single slice of thickness 1 at scale 1.
    """
    ia = config.ia_enabled
    if config.planar_mode:
        params = ProfileParams(o1=1.0, o2=1.0, o3=1.0, z_c=0, z_max=0)
    else:
        params = sample_profile_params(shape_class.z, ia, rng)

    r_max = float(rng.uniform(R_MAX_LOW, R_MAX_HIGH)) if ia else FIXED_R_MAX
    if ia:
        base_shape = sample_xy_shape(shape_class.xy, r_max, rng)
    else:
        base_shape = fixed_xy_shape(shape_class.xy, r_max)

    half_extent = int(math.ceil(r_max)) + 1
    side = 2 * half_extent + 1
    occupancy = np.zeros((side, side, params.z_max + 1), dtype=bool)
    if config.planar_mode:
        occupancy[:, :, 0] = rasterize_slice(base_shape, 1.0, half_extent)
    else:
        for t in range(params.z_max + 1):
            occupancy[:, :, t] = rasterize_slice(
                base_shape, similarity_ratio(params, t), half_extent
            )

    return PrimitiveObject(
        occupancy=occupancy,
        shape_class=shape_class,
        params=params,
        base_shape=base_shape,
        r_max=r_max,
        volume=int(occupancy.sum()),
    )
