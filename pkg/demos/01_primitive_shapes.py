"""Build one primitive per z-axis rule and look at its silhouette.

Every object is a stack of scaled copies of a single base slice; the
per-slice scale follows the piecewise-linear similarity-ratio curve, so
the four z-rules give visibly different profiles: pinched waist
(concave), bulge (convex), constant (pillar), and linear taper (cone).
"""

from __future__ import annotations

import numpy as np

from primvox import (
    GenConfig,
    ShapeClass,
    XyRule,
    ZRule,
    build_primitive,
    derive_sample_stream,
    similarity_ratio,
)


def silhouette(occupancy: np.ndarray) -> str:
    """ASCII xz-silhouette: '#' where any y-column is filled."""
    proj = occupancy.any(axis=1)  # (x, z)
    rows = []
    for z in range(proj.shape[1]):
        rows.append("".join("#" if v else "." for v in proj[:, z]))
    return "\n".join(rows)


def main() -> None:
    config = GenConfig()
    rng = derive_sample_stream(master_seed=7, sample_index=0)

    for z_rule in ZRule:
        shape_class = ShapeClass(xy=XyRule.ELLIPSE, z=z_rule)
        obj = build_primitive(shape_class, config, rng)
        params = obj.params
        print(f"--- {z_rule.name.lower()} ellipse "
              f"(class id {shape_class.class_id}) ---")
        print(f"profile (o1, o2, o3) = "
              f"({params.o1:.3f}, {params.o2:.3f}, {params.o3:.3f}), "
              f"z_c={params.z_c}, z_max={params.z_max}")
        mids = [similarity_ratio(params, z)
                for z in (0, params.z_c, params.z_max)]
        print(f"scale at z=0 / z_c / z_max: "
              f"{mids[0]:.3f} / {mids[1]:.3f} / {mids[2]:.3f}")
        print(f"voxel volume {obj.volume}, extent {obj.occupancy.shape}")
        print(silhouette(obj.occupancy))
        print()


if __name__ == "__main__":
    main()
