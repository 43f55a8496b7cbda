"""camloc: single-image street camera localization from human annotations.

Recovers a camera's intrinsics, 6-DOF pose, and absolute geodetic position
from annotated car axes, parallel-line sets, and pixel-to-GPS references,
and exposes virtual sensors (length, building height, vehicle speed) over
the calibrated camera.
"""

from .errors import CamlocError
from .geometry import (
    CameraPoint,
    CameraPose,
    Intrinsics,
    PixelPoint,
    ProjectionResult,
    Rotation,
    Translation,
    WorldPoint,
    camera_position_world,
    nearest_rotation,
    project_to_pixel,
)
from .vanishing import (
    Edgelet,
    LineSegment2D,
    VanishingPoint,
    VanishingTriple,
    estimate_vp,
    orthocenter_image_center,
    ransac_vps,
    solve_intrinsics,
)
from .extrinsics import (
    DEFAULT_SEDAN,
    CarAxesAnnotation,
    CarDimensions,
    RelativePoseCandidate,
    aggregate_candidates,
    relative_pose_candidates,
    rotation_from_vps,
    translation_from_dimension,
)
from .sensors import PixelTrack, pixel_to_ground, virtual_clinometer, virtual_radar, virtual_scale
from .geodesy import (
    CandidateLocation,
    GeoCoordinate,
    PixelGeoRef,
    absolute_from_one_ref,
    absolute_from_two_refs,
    bearing_candidates,
    circle_intersection,
    offset_geo,
    solve_ref_frame_transform,
)
from .context import (
    IntersectionContext,
    LandmarkContext,
    enumerate_intersection_candidates,
    landmark_candidates,
    match_corner_sequences,
)
from .annotations import (
    AnnotationBundle,
    BoundingBox,
    parse_bundle,
    select_car_bbox,
    serialize_bundle,
    validate_bundle,
)
from .pipeline import PipelineResult, run_pipeline

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
