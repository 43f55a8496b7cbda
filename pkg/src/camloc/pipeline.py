"""End-to-end orchestration: bundles in, relative pose and candidates out.

The batch flow mirrors the annotation workflow: validate every bundle, run
the per-annotator relative estimation (two candidates each), aggregate the
candidate camera positions by clustering, then -- when references or coarse
context are available -- resolve the absolute position.  Invalid or failing
bundles are skipped with warnings and never abort their valid siblings.

The absolute stage needs one concrete (K, R, T) to invert reference pixels,
so it uses the representative candidate: the one whose camera position is
closest to the aggregated estimate (the cluster medoid).  Noise-free, all
candidates coincide and the choice is immaterial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .annotations import AnnotationBundle, validate_bundle
from .context import (
    IntersectionContext,
    LandmarkContext,
    enumerate_intersection_candidates,
    landmark_candidates,
)
from .errors import AllBundlesInvalid, CamlocError, EmptyInput, InvariantViolation
from .extrinsics import (
    DEFAULT_CLUSTER_RADIUS_M,
    DEFAULT_SEDAN,
    CarDimensions,
    RelativePoseCandidate,
    aggregate_candidates,
    relative_pose_candidates,
)
from .geodesy import CandidateLocation, PixelGeoRef, absolute_from_one_ref, absolute_from_two_refs
from .geometry import CameraPose, Intrinsics, WorldPoint
from .sensors import pixel_to_ground


@dataclass
class PipelineResult:
    """Aggregated output of one pipeline run."""

    intrinsics: Intrinsics
    pose: CameraPose
    camera_position: WorldPoint
    relative_candidates: list[RelativePoseCandidate]
    absolute_candidates: list[CandidateLocation] = field(default_factory=list)
    quality: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def run_pipeline(bundles: Sequence[AnnotationBundle],
                 dims: Optional[CarDimensions] = None,
                 refs: Optional[Sequence[PixelGeoRef]] = None,
                 intersection: Optional[IntersectionContext] = None,
                 landmark: Optional[LandmarkContext] = None,
                 street_bearing_deg: Optional[float] = None,
                 cluster_radius_m: float = DEFAULT_CLUSTER_RADIUS_M) -> PipelineResult:
    """Run the full localization pipeline over a batch of bundles.

    Car dimensions: an explicit dims argument overrides everything; else
    each bundle's own dims field (the dimension-estimation stage's output)
    is used, falling back to the standard sedan.  refs / intersection /
    landmark select the absolute stage (refs win when several are given);
    street_bearing_deg is required for the single-reference case.  Raises
    AllBundlesInvalid when no bundle survives validation and estimation.
    """
    if not bundles:
        raise EmptyInput("no bundles supplied")

    warnings: list[str] = []
    candidates: list[RelativePoseCandidate] = []
    for bundle in bundles:
        report = validate_bundle(bundle)
        if not report.valid:
            warnings.append(
                f"bundle {bundle.annotator_id!r} rejected: {', '.join(report.flags)}")
            continue
        bundle_dims = dims if dims is not None else (bundle.dims or DEFAULT_SEDAN)
        try:
            candidates.extend(relative_pose_candidates(bundle, bundle_dims))
        except CamlocError as exc:
            warnings.append(
                f"bundle {bundle.annotator_id!r} failed {type(exc).__name__}: {exc}")
    if not candidates:
        raise AllBundlesInvalid("; ".join(warnings) or "no usable bundles")

    positions = [c.camera_position() for c in candidates]
    aggregated = aggregate_candidates(positions, radius_m=cluster_radius_m)
    representative = min(
        candidates, key=lambda c: c.camera_position().distance_to(aggregated))

    result = PipelineResult(
        intrinsics=representative.intrinsics,
        pose=representative.pose,
        camera_position=aggregated,
        relative_candidates=candidates,
        quality={
            "intrinsics_residual_max": max(c.quality for c in candidates),
            "candidate_count": len(candidates),
            "candidate_spread_m": max(p.distance_to(aggregated) for p in positions),
        },
        warnings=warnings,
    )

    if refs:
        result.absolute_candidates = _absolute_from_refs(
            result, refs, street_bearing_deg)
    elif intersection is not None:
        result.absolute_candidates = enumerate_intersection_candidates(
            intersection, result.intrinsics, result.pose)
    elif landmark is not None:
        result.absolute_candidates = landmark_candidates(
            landmark, result.intrinsics, result.pose)
    return result


def _absolute_from_refs(result: PipelineResult, refs: Sequence[PixelGeoRef],
                        street_bearing_deg: Optional[float]) -> list[CandidateLocation]:
    k, pose = result.intrinsics, result.pose
    from .geometry import camera_position_world

    cam = camera_position_world(pose)
    rels = []
    for ref in refs:
        g = pixel_to_ground(k, pose, ref.pixel)
        rels.append(WorldPoint(cam.x - g.x, cam.y - g.y, cam.z - g.z))
    if len(refs) >= 2:
        return [absolute_from_two_refs(refs[0], refs[1], rels[0], rels[1])]
    if street_bearing_deg is None:
        raise InvariantViolation(
            "pipeline.street_bearing",
            "single-reference localization needs street_bearing_deg")
    return absolute_from_one_ref(rels[0], refs[0].geo, street_bearing_deg)
