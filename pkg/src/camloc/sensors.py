"""Virtual sensors: ground-plane inversion, length, height, and speed.

With a calibrated camera, a pixel known to lie on the ground plane (z = 0)
leaves only three unknowns (x, y, lambda) in the pixel projection equation,
so it can be inverted exactly.  That inversion powers three measurements:

  - virtual scale: distance between two ground pixels,
  - virtual clinometer: building height from a ground-contact pixel and the
    roof pixel vertically above it,
  - virtual radar: vehicle speed from a pixel track, delta * fps * 3.6 km/h
    per frame step, aggregated by the median over consecutive pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, HorizonRay, InvariantViolation, TooShort, VerticalInconsistent
from .geometry import CameraPose, Intrinsics, PixelPoint, WorldPoint, project_to_pixel

# Reprojection residual (px) above which the top-of-building pixel is
# rejected as not vertically above the base.
MAX_VERTICAL_RESIDUAL_PX = 5.0


@dataclass(frozen=True)
class PixelTrack:
    """Pixel positions of one tracked feature over video frames."""

    samples: tuple[tuple[PixelPoint, int], ...]
    fps: float

    def __post_init__(self):
        if self.fps <= 0:
            raise InvariantViolation("PixelTrack.fps", f"fps={self.fps} must be > 0")
        if len(self.samples) < 2:
            raise InvariantViolation("PixelTrack.min_samples", "need >= 2 samples")
        frames = [f for _, f in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise InvariantViolation("PixelTrack.monotonic_frames",
                                     "frame indices must strictly increase")


def pixel_to_ground(k: Intrinsics, pose: CameraPose, p: PixelPoint) -> WorldPoint:
    """Invert the projection for a pixel on the ground plane.

    Solves the 3x3 linear system in (x, y, lambda) obtained from
    lambda [u, v, 1]^T = K (x r_1 + y r_2 + T) with z = 0.

    Raises HorizonRay when the back-projected ray is parallel to the ground
    and BehindCamera when the intersection has non-positive lambda.
    """
    km = k.matrix()
    r = pose.rotation.matrix
    ray_world = r.T @ k.normalized_ray(p)
    if abs(ray_world[2]) / np.linalg.norm(ray_world) < 1e-9:
        raise HorizonRay("pixel ray is parallel to the ground plane")
    a = np.column_stack([km @ r[:, 0], km @ r[:, 1], -p.homogeneous()])
    b = -(km @ pose.translation.as_array())
    x, y, lam = np.linalg.solve(a, b)
    if lam <= 0:
        raise BehindCamera(f"ground intersection behind the camera (lambda={lam:.3e})")
    return WorldPoint(float(x), float(y), 0.0)


def virtual_scale(k: Intrinsics, pose: CameraPose,
                  p1: PixelPoint, p2: PixelPoint) -> float:
    """Meters between two annotated ground-plane pixels."""
    g1 = pixel_to_ground(k, pose, p1)
    g2 = pixel_to_ground(k, pose, p2)
    return g1.distance_to(g2)


def virtual_clinometer(k: Intrinsics, pose: CameraPose,
                       base: PixelPoint, top: PixelPoint) -> float:
    """Building height from its ground-contact pixel and roof pixel.

    The base is inverted on the ground plane; the top is then constrained
    to the vertical line through the base, leaving (z, lambda) in an
    overdetermined 3x2 system solved by least squares.  The pixel ray
    generically misses the exact vertical, so the reprojection residual is
    checked and VerticalInconsistent raised above MAX_VERTICAL_RESIDUAL_PX.
    """
    g = pixel_to_ground(k, pose, base)
    km = k.matrix()
    r = pose.rotation.matrix
    a = np.column_stack([km @ r[:, 2], -top.homogeneous()])
    b = -(km @ (g.x * r[:, 0] + g.y * r[:, 1] + pose.translation.as_array()))
    (z, lam), *_ = np.linalg.lstsq(a, b, rcond=None)
    if lam <= 0:
        raise BehindCamera(f"roof point behind the camera (lambda={lam:.3e})")
    reproj = project_to_pixel(k, pose, WorldPoint(g.x, g.y, float(z)))
    residual = reproj.pixel.distance_to(top)
    if residual > MAX_VERTICAL_RESIDUAL_PX:
        raise VerticalInconsistent(
            f"top pixel is {residual:.1f} px off the vertical through the base", residual)
    return float(z)


def virtual_radar(k: Intrinsics, pose: CameraPose, track: PixelTrack) -> float:
    """Vehicle speed in km/h from a ground-plane pixel track.

    Each consecutive sample pair contributes delta * fps * 3.6 / frame_gap;
    the reported speed is the median over pairs, which shrugs off
    single-frame tracking glitches.
    """
    grounds: list[tuple[WorldPoint, int]] = []
    for pixel, frame in track.samples:
        grounds.append((pixel_to_ground(k, pose, pixel), frame))
    if len(grounds) < 2:
        raise TooShort(f"only {len(grounds)} usable samples")
    speeds = []
    for (g0, f0), (g1, f1) in zip(grounds, grounds[1:]):
        delta = g0.distance_to(g1)
        speeds.append(delta * track.fps * 3.6 / (f1 - f0))
    return float(np.median(speeds))
