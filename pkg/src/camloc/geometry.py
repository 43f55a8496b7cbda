"""Core camera geometry: coordinate systems, projection, rotation hygiene.

COORDINATE CONVENTIONS
======================
World frame (meters):
  - Origin at the annotated near-bottom corner of the reference car.
  - x along the car length, y along the car width, z up along the height.
  - Ground plane is z = 0.

Camera frame (meters):
  - Origin at the optical center, z along the optical axis (into the scene),
    x right, y down (so that +y matches the pixel v direction).

Pixel frame:
  - Origin at the top-left image corner, u right, v DOWN.  Vanishing points
    may fall far outside the image bounds.

The world-to-camera map is  x_c = R x_w + T  and the pixel projection is

    lambda * [u, v, 1]^T = K (R x_w + T)

with lambda equal to the camera-frame depth of the point.  The camera's
position in world coordinates is -R^T T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, InvariantViolation, Singular

# Centralized tolerances: plain geometric comparisons, SO(3) membership,
# and singularity detection.
TOL_GEOMETRIC = 1e-9
TOL_SO3 = 1e-9
TOL_SINGULAR = 1e-12


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvariantViolation(f"{name}.finite", f"{name} has non-finite value {v!r}")


@dataclass(frozen=True)
class PixelPoint:
    """Image point in pixels, top-left origin, v pointing down."""

    u: float
    v: float

    def __post_init__(self):
        _require_finite("PixelPoint", self.u, self.v)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)

    def homogeneous(self) -> np.ndarray:
        return np.array([self.u, self.v, 1.0])

    def distance_to(self, other: "PixelPoint") -> float:
        return math.hypot(self.u - other.u, self.v - other.v)


@dataclass(frozen=True)
class WorldPoint:
    """Point in the world frame (meters, z up)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("WorldPoint", self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "WorldPoint") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def ground_distance_to(self, other: "WorldPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class CameraPoint:
    """Point in the camera frame (meters, z along the optical axis)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite("CameraPoint", self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics with zero skew.

    fx and fy are the focal length divided by the pixel pitch in each
    direction; (cx, cy) is the image center in pixels.  Only the products
    that enter the projection matter, so this reduced parameterization is
    equivalent to carrying (f, dp_x, dp_y) separately.
    """

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        _require_finite("Intrinsics", self.fx, self.fy, self.cx, self.cy)
        if self.fx <= 0 or self.fy <= 0:
            raise InvariantViolation("Intrinsics.positive_focal",
                                     f"fx={self.fx}, fy={self.fy} must be > 0")

    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def inverse_matrix(self) -> np.ndarray:
        # Analytic inverse of the zero-skew K.
        return np.array([
            [1.0 / self.fx, 0.0, -self.cx / self.fx],
            [0.0, 1.0 / self.fy, -self.cy / self.fy],
            [0.0, 0.0, 1.0],
        ])

    def normalized_ray(self, p: PixelPoint) -> np.ndarray:
        """K^-1 [u, v, 1]^T: the camera-frame ray through a pixel (z = 1)."""
        return np.array([(p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy, 1.0])


class Rotation:
    """A 3x3 special orthogonal matrix (world-to-camera).

    Columns are the world axis directions expressed in camera coordinates.
    Construction validates orthonormality and det = +1 to TOL_SO3; use
    nearest_rotation() to sanitize approximate estimates first.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix) -> None:
        m = np.asarray(matrix, dtype=float)
        if m.shape != (3, 3):
            raise InvariantViolation("Rotation.shape", f"expected 3x3, got {m.shape}")
        if not np.isfinite(m).all():
            raise InvariantViolation("Rotation.finite")
        if np.linalg.norm(m @ m.T - np.eye(3)) > TOL_SO3:
            raise InvariantViolation("Rotation.orthonormal",
                                     "R @ R.T deviates from identity beyond tolerance")
        if abs(np.linalg.det(m) - 1.0) > TOL_SO3:
            raise InvariantViolation("Rotation.det", f"det = {np.linalg.det(m)}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "_m", m)

    def __setattr__(self, *args):  # immutable value type
        raise AttributeError("Rotation is immutable")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self._m, other._m))

    def __hash__(self) -> int:
        return hash(self._m.tobytes())

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def column(self, i: int) -> np.ndarray:
        return self._m[:, i].copy()

    def apply(self, vec) -> np.ndarray:
        return self._m @ np.asarray(vec, dtype=float)

    def transposed(self) -> "Rotation":
        return Rotation(self._m.T)

    def geodesic_angle_to(self, other: "Rotation") -> float:
        """Angle in radians of the relative rotation between self and other."""
        trace = float(np.trace(self._m.T @ other._m))
        return math.acos(min(1.0, max(-1.0, (trace - 1.0) / 2.0)))

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.eye(3))

    def __repr__(self) -> str:
        return f"Rotation({self._m.tolist()!r})"


@dataclass(frozen=True)
class Translation:
    """World origin expressed in camera coordinates (meters)."""

    tx: float
    ty: float
    tz: float

    def __post_init__(self):
        _require_finite("Translation", self.tx, self.ty, self.tz)
        if self.tz <= 0:
            raise InvariantViolation("Translation.positive_depth",
                                     f"tz={self.tz} must be > 0 (origin in front of camera)")

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tz], dtype=float)


@dataclass(frozen=True)
class CameraPose:
    """Extrinsic parameters: x_c = R x_w + T."""

    rotation: Rotation
    translation: Translation

    def matrix(self) -> np.ndarray:
        """The 3x4 extrinsic matrix [R | T]."""
        return np.hstack([self.rotation.matrix, self.translation.as_array().reshape(3, 1)])

    def to_camera(self, p: WorldPoint) -> CameraPoint:
        v = self.rotation.apply(p.as_array()) + self.translation.as_array()
        return CameraPoint(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class ProjectionResult:
    """Dehomogenized pixel plus the homogeneous scale lambda (= depth)."""

    pixel: PixelPoint
    depth_scale: float


def project_to_pixel(k: Intrinsics, pose: CameraPose, p: WorldPoint) -> ProjectionResult:
    """Apply the pixel projection equation to a world point.

    Returns the dehomogenized pixel and the scale lambda satisfying
    lambda [u, v, 1]^T = K [R | T] [x_w, 1]^T.  lambda equals the
    camera-frame depth of the point.

    Raises BehindCamera if the depth is <= TOL_GEOMETRIC.
    """
    cam = pose.rotation.apply(p.as_array()) + pose.translation.as_array()
    depth = float(cam[2])
    if depth <= TOL_GEOMETRIC:
        raise BehindCamera(f"point maps to depth {depth:.3e} m")
    u = k.fx * cam[0] / depth + k.cx
    v = k.fy * cam[1] / depth + k.cy
    return ProjectionResult(PixelPoint(float(u), float(v)), depth)


def camera_position_world(pose: CameraPose) -> WorldPoint:
    """Camera position in world coordinates: -R^T T."""
    c = -pose.rotation.matrix.T @ pose.translation.as_array()
    return WorldPoint(float(c[0]), float(c[1]), float(c[2]))


def nearest_rotation(m) -> Rotation:
    """Project a nonsingular 3x3 matrix onto SO(3) via SVD.

    Computes U V^H from the SVD of m and fixes the sign of the last
    singular direction so the determinant is +1.  Idempotent on valid
    rotations.  Raises Singular if any singular value is < TOL_SINGULAR.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise InvariantViolation("nearest_rotation.shape", f"expected 3x3, got {m.shape}")
    u, s, vh = np.linalg.svd(m)
    if s[-1] < TOL_SINGULAR:
        raise Singular(f"smallest singular value {s[-1]:.3e} below {TOL_SINGULAR}")
    d = np.sign(np.linalg.det(u @ vh))
    r = u @ np.diag([1.0, 1.0, d]) @ vh
    return Rotation(r)
