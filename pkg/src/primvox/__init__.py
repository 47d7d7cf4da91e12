"""primvox: deterministic generator of assembled 3D primitive-object
volumes and segmentation masks."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    ALL_CLASSES,
    EllipseShape,
    PolygonShape,
    PrimitiveObject,
    ProfileParams,
    ShapeClass,
    XyRule,
    ZRule,
    build_primitive,
    rasterize_slice,
    sample_profile_params,
    sample_xy_shape,
    similarity_ratio,
)
from .assembly import (  # noqa: F401
    AssembledSample,
    GenConfig,
    LabelMode,
    PlacementRecord,
    composite,
    extract_shell,
    overlap_ratio,
    place_object,
    sort_by_volume,
)
from .pipeline import (  # noqa: F401
    dataset_stats,
    derive_sample_stream,
    generate_dataset,
    generate_sample,
    load_manifest,
    validate_dataset,
)
from .volio import (  # noqa: F401
    VolumeFormatError,
    VolumeHeader,
    read_volume,
    render_preview,
    write_volume,
)
