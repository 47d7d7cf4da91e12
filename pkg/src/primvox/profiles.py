"""Named configuration profiles.

Each profile is a partial GenConfig override; ablation axes (planar vs
volumetric, class-count restriction, instance augmentation, overlap) and
dataset-size presets each get one entry so a full configuration is a
single --profile flag.
"""

from __future__ import annotations

PROFILES: dict[str, dict] = {
    # shape ablations
    "planar": {"planar_mode": True, "overlap_enabled": False},
    "volumetric-cone": {"allowed_z": ["cone"], "overlap_enabled": False},
    # class-count ablations
    "classes-1x1": {"allowed_xy": ["ellipse"], "allowed_z": ["cone"]},
    "classes-1x4": {"allowed_xy": ["ellipse"]},
    "classes-8x1": {"allowed_z": ["cone"]},
    "classes-8x4": {},
    # instance augmentation / overlap ablations
    "no-ia": {"ia_enabled": False},
    "no-overlap": {"overlap_enabled": False},
    # dataset-size presets; the large ones gzip their volumes to keep
    # on-disk size within budget
    "0.8k": {"n_samples": 800},
    "2.5k": {"n_samples": 2500},
    "5k": {"n_samples": 5000, "compress": True},
    "50k": {"n_samples": 50000, "compress": True},
}


def profile_overrides(name: str) -> dict:
    if name not in PROFILES:
        raise KeyError(
            f"unknown profile {name!r}; available: {', '.join(sorted(PROFILES))}"
        )
    return dict(PROFILES[name])
