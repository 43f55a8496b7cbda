"""Rotation and translation recovery from vanishing points and car axes.

Each column r_i of the world-to-camera rotation is the world axis direction
in camera coordinates, and the VP of that axis satisfies

    lambda_i K^-1 [v_i, 1]^T = r_i,    ||r_i|| = 1

so the column is recovered up to sign by normalizing K^-1 applied to the
homogeneous VP.  Signs are fixed from the annotated car-axis endpoints (a
world axis recedes toward its VP in the image exactly when its annotated
endpoint lies on the VP side of the origin pixel), the result is sanitized
with nearest_rotation, and the translation follows from the annotated world
origin plus one known car dimension via the closed form

    t_z = (a_1 * D * r_3c - D * r_1c) / (a_0 - a_1),   t_x = a_0 t_z,  t_y = b_0 t_z

where (a_0, b_0), (a_1, b_1) are the normalized rays of the origin and
endpoint pixels, D the dimension, and c the axis column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, Sequence

import numpy as np

from .errors import (
    EmptyInput,
    InvariantViolation,
    NegativeDepth,
    NotARotation,
    ParallelProjection,
)
from .geometry import (
    CameraPose,
    Intrinsics,
    PixelPoint,
    Rotation,
    Translation,
    WorldPoint,
    camera_position_world,
    nearest_rotation,
)
from .vanishing import VanishingTriple, estimate_vp, orthogonality_residual, solve_intrinsics

if TYPE_CHECKING:
    from .annotations import AnnotationBundle

Axis = Literal["length", "width", "height"]

_AXIS_COLUMN = {"length": 0, "width": 1, "height": 2}

# Frobenius distance between the raw column estimate and its SO(3)
# projection above which the VPs are declared inconsistent.
MAX_SANITIZE_DISTANCE = 0.5

# Default cluster radius for aggregating per-annotator candidate positions.
DEFAULT_CLUSTER_RADIUS_M = 5.0


@dataclass(frozen=True)
class CarAxesAnnotation:
    """The four annotated pixels: world origin and one point per car axis."""

    origin: PixelPoint
    x_end: PixelPoint
    y_end: PixelPoint
    z_end: PixelPoint

    def __post_init__(self):
        pts = [self.origin, self.x_end, self.y_end, self.z_end]
        for i in range(4):
            for j in range(i + 1, 4):
                if pts[i].distance_to(pts[j]) <= 1.0:
                    raise InvariantViolation("CarAxesAnnotation.distinct",
                                             "axis points closer than 1 px")

    def endpoint(self, axis: Axis) -> PixelPoint:
        return {"length": self.x_end, "width": self.y_end, "height": self.z_end}[axis]


@dataclass(frozen=True)
class CarDimensions:
    """Reference car dimensions in meters."""

    length_m: float
    width_m: float
    height_m: float

    def __post_init__(self):
        for name, v in (("length_m", self.length_m), ("width_m", self.width_m),
                        ("height_m", self.height_m)):
            if not (0.5 < v < 30.0):
                raise InvariantViolation("CarDimensions.range",
                                         f"{name}={v} outside (0.5, 30) m")

    def along(self, axis: Axis) -> float:
        return {"length": self.length_m, "width": self.width_m,
                "height": self.height_m}[axis]


# Standard sedan defaults; length matches the expected error magnitude of a
# wrong-corner annotation (one car length).  All three are configurable.
DEFAULT_SEDAN = CarDimensions(length_m=4.5, width_m=1.8, height_m=1.5)


@dataclass(frozen=True)
class RelativePoseCandidate:
    """One candidate pose, tagged with the axis and annotator it came from."""

    pose: CameraPose
    intrinsics: Intrinsics
    source_axis: Axis
    annotator_id: str
    quality: float

    def camera_position(self) -> WorldPoint:
        return camera_position_world(self.pose)


def rotation_from_vps(k: Intrinsics, t: VanishingTriple,
                      axes: CarAxesAnnotation | None = None) -> Rotation:
    """Rotation whose columns are the normalized K^-1 images of the VPs.

    Column signs: with the car-axis annotation, each column is oriented so
    the world axis recedes toward its VP iff the annotated endpoint lies on
    the VP side of the origin pixel.  Without it, the length and width
    axes are assumed to recede from the camera (the annotated origin is the
    *nearest* car corner).  If the determinant is then negative, the height
    column (the least-trusted axis) is flipped before SVD sanitization.

    Raises NotARotation when sanitization moves the matrix by more than
    MAX_SANITIZE_DISTANCE in Frobenius norm, which signals VPs that are not
    consistent with any rigid rotation.
    """
    kinv = k.inverse_matrix()
    cols = []
    for vp in (t.vx, t.vy, t.vz):
        c = kinv @ vp.pixel_homogeneous()
        cols.append(c / np.linalg.norm(c))
    raw = np.column_stack(cols)
    # raw columns have positive z (receding axes) by construction.
    if axes is not None:
        for i, (vp, axis) in enumerate(zip((t.vx, t.vy, t.vz),
                                           ("length", "width", "height"))):
            to_vp = vp.inhomogeneous.as_array() - axes.origin.as_array()
            to_end = axes.endpoint(axis).as_array() - axes.origin.as_array()
            if float(np.dot(to_vp, to_end)) < 0:
                raw[:, i] = -raw[:, i]
    if np.linalg.det(raw) < 0:
        raw[:, 2] = -raw[:, 2]
    r = nearest_rotation(raw)
    dist = float(np.linalg.norm(r.matrix - raw))
    if dist > MAX_SANITIZE_DISTANCE:
        raise NotARotation(f"sanitization moved the estimate by {dist:.3f} (Frobenius); "
                           "vanishing points are inconsistent")
    return r


def translation_from_dimension(k: Intrinsics, r: Rotation,
                               origin_px: PixelPoint, end_px: PixelPoint,
                               axis: Axis, dim_m: float) -> Translation:
    """Translation from the origin pixel and one known car dimension.

    Applies the closed form for the chosen axis column of R (see module
    docstring).  If the raw t_z is negative the full vector is negated
    (the homogeneous-scale sign choice); a depth that is still non-positive
    raises NegativeDepth because the annotated car must be in front of the
    camera.
    """
    if dim_m <= 0:
        raise InvariantViolation("translation.dimension", f"dim_m={dim_m} must be > 0")
    a0, b0, _ = k.normalized_ray(origin_px)
    a1, b1, _ = k.normalized_ray(end_px)
    if abs(a0 - a1) < 1e-9:
        raise ParallelProjection(
            f"normalized x-rays coincide (a0={a0:.6f}, a1={a1:.6f}); closed form singular")
    col = _AXIS_COLUMN[axis]
    r1c = float(r.matrix[0, col])
    r3c = float(r.matrix[2, col])
    tz = (a1 * dim_m * r3c - dim_m * r1c) / (a0 - a1)
    tx, ty = a0 * tz, b0 * tz
    if tz < 0:
        tx, ty, tz = -tx, -ty, -tz
    if tz <= 0:
        raise NegativeDepth(f"world origin depth {tz:.3e} m is not positive")
    return Translation(tx, ty, tz)


def relative_pose_candidates(bundle: "AnnotationBundle",
                             dims: CarDimensions = DEFAULT_SEDAN
                             ) -> list[RelativePoseCandidate]:
    """Full per-annotator estimation: two pose candidates per bundle.

    Runs estimate_vp on each parallel set, solves the intrinsics from the
    orthocenter, recovers the rotation, and solves the translation twice:
    once from the length axis and once from the width axis.  The height
    direction is never used for translation (it is the least consistently
    annotated).  Candidate quality is the intrinsics orthogonality residual.
    """
    triple = VanishingTriple(
        vx=estimate_vp(bundle.parallel_sets[0]),
        vy=estimate_vp(bundle.parallel_sets[1]),
        vz=estimate_vp(bundle.parallel_sets[2]),
    )
    k = solve_intrinsics(triple)
    quality = orthogonality_residual(k, triple)
    r = rotation_from_vps(k, triple, axes=bundle.car_axes)
    candidates = []
    for axis in ("length", "width"):
        t = translation_from_dimension(k, r, bundle.car_axes.origin,
                                       bundle.car_axes.endpoint(axis),
                                       axis, dims.along(axis))
        candidates.append(RelativePoseCandidate(
            pose=CameraPose(rotation=r, translation=t),
            intrinsics=k,
            source_axis=axis,
            annotator_id=bundle.annotator_id,
            quality=quality,
        ))
    return candidates


def aggregate_candidates(candidates: Sequence[WorldPoint],
                         radius_m: float = DEFAULT_CLUSTER_RADIUS_M) -> WorldPoint:
    """Centroid of the largest single-linkage cluster of candidate positions.

    Two candidates join the same cluster when some chain of pairwise
    distances <= radius_m connects them.  Ties on cluster size break toward
    the smallest within-cluster variance, then the lexicographically
    smallest centroid (a value-based stand-in for the earliest member:
    index order cannot break ties without destroying permutation
    invariance), then the earliest member index for exact duplicates.
    """
    if not candidates:
        raise EmptyInput("no candidate positions to aggregate")
    n = len(candidates)
    pts = np.stack([c.as_array() for c in candidates])
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) <= radius_m:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)

    def rank(members: list[int]) -> tuple:
        sub = pts[members]
        centroid = sub.mean(axis=0)
        variance = float(((sub - centroid) ** 2).sum(axis=1).mean())
        return (-len(members), variance, tuple(centroid), min(members))

    best = min(clusters.values(), key=rank)
    centroid = pts[best].mean(axis=0)
    return WorldPoint(float(centroid[0]), float(centroid[1]), float(centroid[2]))
