"""Arrangement of primitive objects into a volume pair (S, m).

Objects are placed largest-first under an overlap-ratio condition; the
label volume m is written with overwrite semantics (later, smaller
objects win) and the intensity volume S is the union of per-object
shells at a fixed intensity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from .geometry import (
    ALL_CLASSES,
    PrimitiveObject,
    ShapeClass,
    XyRule,
    ZRule,
)


class LabelMode(Enum):
    BINARY = "binary"
    SHAPE_CLASS = "shape_class"
    INSTANCE = "instance"


@dataclass
class GenConfig:
    """Every generation knob for one dataset."""

    grid: tuple[int, int, int] = (96, 96, 96)
    m_objects: int = 15
    overlap_threshold: float = 0.25
    max_iter: int = 100
    intensity: int = 128
    label_mode: LabelMode = LabelMode.SHAPE_CLASS
    ia_enabled: bool = True
    overlap_enabled: bool = True
    planar_mode: bool = False
    allowed_xy: tuple[XyRule, ...] = tuple(x for x in XyRule)
    allowed_z: tuple[ZRule, ...] = tuple(z for z in ZRule)
    n_samples: int = 1
    master_seed: int = 0
    compress: bool = False

    def validate(self) -> None:
        w, h, d = self.grid
        if min(w, h, d) < 16:
            raise ValueError(f"grid dims must be >= 16, got {self.grid}")
        if self.m_objects < 1:
            raise ValueError("m_objects must be >= 1")
        if not 0.0 <= self.overlap_threshold <= 1.0:
            raise ValueError("overlap_threshold must lie in [0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 <= self.intensity <= 255:
            raise ValueError("intensity must fit in u8")
        if not self.allowed_xy or not self.allowed_z:
            raise ValueError("allowed class sets must be non-empty")
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")

    @property
    def allowed_classes(self) -> list[ShapeClass]:
        allowed = [
            c for c in ALL_CLASSES
            if c.xy in self.allowed_xy and c.z in self.allowed_z
        ]
        return sorted(allowed, key=lambda c: c.class_id)

    def to_dict(self) -> dict:
        return {
            "grid": list(self.grid),
            "m_objects": self.m_objects,
            "overlap_threshold": self.overlap_threshold,
            "max_iter": self.max_iter,
            "intensity": self.intensity,
            "label_mode": self.label_mode.value,
            "ia_enabled": self.ia_enabled,
            "overlap_enabled": self.overlap_enabled,
            "planar_mode": self.planar_mode,
            "allowed_xy": [x.value for x in self.allowed_xy],
            "allowed_z": [z.value for z in self.allowed_z],
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "compress": self.compress,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "grid" in kwargs:
            kwargs["grid"] = tuple(kwargs["grid"])
        if "label_mode" in kwargs:
            kwargs["label_mode"] = LabelMode(kwargs["label_mode"])
        if "allowed_xy" in kwargs:
            kwargs["allowed_xy"] = tuple(XyRule(x) for x in kwargs["allowed_xy"])
        if "allowed_z" in kwargs:
            kwargs["allowed_z"] = tuple(ZRule(z) for z in kwargs["allowed_z"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


@dataclass
class PlacementRecord:
    """Outcome of one placement attempt sequence for one object."""

    order_index: int
    shape_class: ShapeClass
    center: tuple[int, int, int]
    accepted: bool
    attempts: int
    overlap_ratio_at_acceptance: float
    in_bounds_volume: int
    volume: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape_class"] = self.shape_class.class_id
        d["center"] = list(self.center)
        return d


@dataclass
class AssembledSample:
    """Composited intensity volume S, label volume m, and provenance."""

    s_volume: np.ndarray
    m_volume: np.ndarray
    placements: list[PlacementRecord]
    sample_seed: tuple[int, ...]


def sort_by_volume(objects: list[PrimitiveObject]) -> list[PrimitiveObject]:
    """Stable descending sort by voxel volume."""
    if not objects:
        raise ValueError("object list must be non-empty")
    return sorted(objects, key=lambda o: -o.volume)


def overlap_ratio(occupied: np.ndarray, candidate: np.ndarray) -> float:
    """|A intersect B| / |B| over a boolean candidate region.

    Both arrays must have identical shape (the candidate already clipped
    to grid bounds). An empty candidate is a degenerate placement.
    """
    b = int(candidate.sum())
    if b == 0:
        raise ValueError("candidate region is empty after clipping")
    return int((occupied & candidate).sum()) / b


def _clipped_window(
    obj: PrimitiveObject, center: tuple[int, int, int], grid: tuple[int, int, int]
):
    """In-bounds sub-windows of the grid and of the object's local box.

    Returns (grid slices, local slices) or None if the translated object
    lies entirely out of bounds.
    """
    h = obj.half_extent
    zc = obj.occupancy.shape[2] // 2
    lo = (center[0] - h, center[1] - h, center[2] - zc)
    shape = obj.occupancy.shape
    gs, ls = [], []
    for axis in range(3):
        g0 = max(0, lo[axis])
        g1 = min(grid[axis], lo[axis] + shape[axis])
        if g0 >= g1:
            return None
        gs.append(slice(g0, g1))
        ls.append(slice(g0 - lo[axis], g1 - lo[axis]))
    return tuple(gs), tuple(ls)


def place_object(
    state: np.ndarray,
    obj: PrimitiveObject,
    config: GenConfig,
    rng: np.random.Generator,
) -> PlacementRecord:
    """Try up to max_iter random centers; accept on the overlap condition.

    On acceptance the occupancy accumulator `state` gains the object's
    in-bounds voxels. Rejection is a normal, recorded outcome.
    """
    w, h, d = config.grid
    attempts = 0
    center = (0, 0, 0)
    while attempts < config.max_iter:
        attempts += 1
        center = (
            int(rng.integers(0, w)),
            int(rng.integers(0, h)),
            int(rng.integers(0, d)),
        )
        win = _clipped_window(obj, center, config.grid)
        if win is None:
            continue
        gsl, lsl = win
        candidate = obj.occupancy[lsl]
        b = int(candidate.sum())
        if b == 0:
            continue
        ratio = overlap_ratio(state[gsl], candidate)
        if config.overlap_enabled:
            ok = ratio < config.overlap_threshold
        else:
            ok = ratio == 0.0
        if ok:
            state[gsl] |= candidate
            return PlacementRecord(
                order_index=-1,
                shape_class=obj.shape_class,
                center=center,
                accepted=True,
                attempts=attempts,
                overlap_ratio_at_acceptance=ratio,
                in_bounds_volume=b,
                volume=obj.volume,
            )
    return PlacementRecord(
        order_index=-1,
        shape_class=obj.shape_class,
        center=center,
        accepted=False,
        attempts=attempts,
        overlap_ratio_at_acceptance=0.0,
        in_bounds_volume=0,
        volume=obj.volume,
    )


def extract_shell(filled: np.ndarray) -> np.ndarray:
    """Voxels of `filled` with at least one of 6 face-neighbours outside.

    Out-of-grid counts as outside, so the shell of a clipped solid still
    closes at the grid boundary of the local box.
    """
    padded = np.pad(filled, 1, mode="constant", constant_values=False)
    interior = np.ones_like(filled)
    for axis in range(3):
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        interior &= padded[tuple(lo)] & padded[tuple(hi)]
    return filled & ~interior


def composite(
    accepted: list[tuple[PrimitiveObject, tuple[int, int, int]]],
    config: GenConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Build (s_volume, m_volume) from accepted placements in order.

    m: each object's filled in-bounds voxels get its label, overwriting
    earlier (larger) objects. S: union of per-object shells (computed on
    each object's own local grid, then translated and clipped) at the
    fixed intensity.
    """
    m_dtype = np.uint16 if config.label_mode is LabelMode.INSTANCE else np.uint8
    s = np.zeros(config.grid, dtype=np.uint8)
    m = np.zeros(config.grid, dtype=m_dtype)
    for i, (obj, center) in enumerate(accepted):
        win = _clipped_window(obj, center, config.grid)
        if win is None:
            continue
        gsl, lsl = win
        filled = obj.occupancy[lsl]
        if config.label_mode is LabelMode.BINARY:
            label = 1
        elif config.label_mode is LabelMode.SHAPE_CLASS:
            label = obj.shape_class.class_id + 1
        else:
            label = i + 1
        if label > np.iinfo(m_dtype).max:
            raise ValueError(f"label {label} overflows {m_dtype}")
        region = m[gsl]
        region[filled] = label
        shell = extract_shell(obj.occupancy)[lsl]
        s_region = s[gsl]
        s_region[shell] = config.intensity
    return s, m
