"""Synthetic ground-truth scenes: the verification oracle for every estimator.

A scene is a fully known camera (K, R, T), its geodetic position, and a car
of known dimensions sitting at the world origin with x along its length,
y along its width, z up.  The camera is placed in the (-x, -y) quadrant so
the annotated origin corner is the nearest one and the length/width axes
recede from the camera, matching the annotation convention.

World-to-geodetic mapping: the world x-axis runs along the street at
bearing theta (clockwise from true north) and the right-handed z-up frame
puts the y-axis at bearing theta - 90.  A world ground point (x, y) is

    north = x cos(theta) + y sin(theta)
    east  = x sin(theta) - y cos(theta)

meters from the anchor (the car origin), converted to degrees with the
flat-earth scale factors anchored at the anchor latitude.

Rendering projects exact geometry and perturbs every annotated endpoint
with isotropic Gaussian pixel noise of a configurable sigma -- the real
annotator error distribution is unknown, so sigma is a free calibration
knob that every reported envelope states explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .context import IntersectionContext, LandmarkContext
from .errors import LengthMismatch, Unsatisfiable
from .extrinsics import CarAxesAnnotation, CarDimensions
from .annotations import AnnotationBundle
from .geodesy import GeoCoordinate, PixelGeoRef, geo_distance_m, local_meters_to_geo
from .geometry import (
    CameraPose,
    Intrinsics,
    PixelPoint,
    Rotation,
    Translation,
    WorldPoint,
    camera_position_world,
    project_to_pixel,
)
from .vanishing import Edgelet, LineSegment2D, VanishingPoint, VanishingTriple

MAX_GENERATION_ATTEMPTS = 10_000

PERCENTILE_LEVELS = (50, 80, 90, 95, 100)


@dataclass(frozen=True)
class SceneRanges:
    """Sampling ranges for scene generation."""

    camera_height_m: tuple[float, float] = (2.0, 15.0)
    camera_distance_m: tuple[float, float] = (5.0, 50.0)
    focal_px: tuple[float, float] = (700.0, 1500.0)
    image_size: tuple[int, int] = (1280, 720)
    roll_deg: tuple[float, float] = (-8.0, 8.0)
    anchor_lat_deg: tuple[float, float] = (-55.0, 55.0)
    # fy/fx sampling range.  Scenes are square-pixel by default: the
    # orthocenter-based calibration is exact only for fx = fy (the VP
    # triangle orthocenter coincides with the principal point under the
    # Euclidean metric alone), so anamorphic scenes are an explicit
    # robustness knob rather than oracle ground truth.
    pixel_aspect: tuple[float, float] = (1.0, 1.0)
    # Reject scenes where any world axis has |z-component in camera frame|
    # below this: such axes give far or infinite vanishing points.
    min_axis_depth: float = 0.08
    # Minimum VP triangle area for a well-conditioned orthocenter.
    min_triangle_area_px2: float = 1e4


DEFAULT_RANGES = SceneRanges()


@dataclass(frozen=True)
class IntersectionTruth:
    """Ground truth for a rectangular intersection near the camera."""

    corner_geos: tuple[GeoCoordinate, ...]     # clockwise on the map
    corner_world: tuple[WorldPoint, ...]       # same order
    visible_indices: tuple[int, ...]           # consecutive, clockwise


@dataclass(frozen=True)
class LandmarkTruth:
    """Ground truth for a geo-tagged rectangular building."""

    geo_tag: GeoCoordinate
    footprint_geos: tuple[GeoCoordinate, ...]
    footprint_world: tuple[WorldPoint, ...]
    face_mid_world: WorldPoint
    front_corner_indices: tuple[int, int]      # footprint indices of the visible face
    street_bearing_deg: float


@dataclass(frozen=True)
class SyntheticScene:
    intrinsics: Intrinsics
    pose: CameraPose
    camera_geo: GeoCoordinate
    camera_height_m: float
    car_dims: CarDimensions
    car_yaw_deg: float
    street_bearing_deg: float
    anchor_geo: GeoCoordinate
    image_size: tuple[int, int]
    seed: int
    intersection: Optional[IntersectionTruth] = None
    landmark: Optional[LandmarkTruth] = None

    def camera_position(self) -> WorldPoint:
        return camera_position_world(self.pose)

    def world_to_geo(self, x: float, y: float) -> GeoCoordinate:
        """Geodetic position of a world ground point (see module docstring)."""
        theta = math.radians(self.street_bearing_deg + self.car_yaw_deg)
        north = x * math.cos(theta) + y * math.sin(theta)
        east = x * math.sin(theta) - y * math.cos(theta)
        return local_meters_to_geo(self.anchor_geo, north, east)

    def vanishing_triple(self) -> VanishingTriple:
        """Exact VPs of the three world axes: dehomogenized K R e_i."""
        km = self.intrinsics.matrix()
        r = self.pose.rotation.matrix
        vps = [VanishingPoint.from_homogeneous(km @ r[:, i]) for i in range(3)]
        return VanishingTriple(vx=vps[0], vy=vps[1], vz=vps[2])

    def in_image(self, p: PixelPoint, margin: float = 0.0) -> bool:
        w, h = self.image_size
        return margin <= p.u <= w - margin and margin <= p.v <= h - margin


def _look_at_rotation(camera: np.ndarray, target: np.ndarray, roll_deg: float) -> np.ndarray:
    """World-to-camera rotation looking from camera toward target, z up."""
    forward = target - camera
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        raise ValueError("camera looking straight up or down")
    right = right / norm
    down = np.cross(forward, right)
    c, s = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
    right_r = c * right + s * down
    down_r = -s * right + c * down
    return np.stack([right_r, down_r, forward])


def generate_scene(seed: int, config: SceneRanges = DEFAULT_RANGES) -> SyntheticScene:
    """Deterministically sample a valid scene (rejection sampling).

    Raises Unsatisfiable if no sample passes the invariants within
    MAX_GENERATION_ATTEMPTS.
    """
    rng = np.random.default_rng(seed)
    w, h = config.image_size
    for _ in range(MAX_GENERATION_ATTEMPTS):
        dims = CarDimensions(
            length_m=float(rng.uniform(4.2, 4.8)),
            width_m=float(rng.uniform(1.7, 1.9)),
            height_m=float(rng.uniform(1.4, 1.6)),
        )
        height = float(rng.uniform(*config.camera_height_m))
        distance = float(rng.uniform(*config.camera_distance_m))
        azimuth = math.radians(float(rng.uniform(8.0, 82.0)))
        camera = np.array([-distance * math.cos(azimuth),
                           -distance * math.sin(azimuth),
                           height])
        target = np.array([dims.length_m / 2 + float(rng.uniform(-1.0, 1.0)),
                           dims.width_m / 2 + float(rng.uniform(-1.0, 1.0)),
                           float(rng.uniform(0.0, dims.height_m))])
        roll = float(rng.uniform(*config.roll_deg))
        fx = float(rng.uniform(*config.focal_px))
        fy = fx * float(rng.uniform(*config.pixel_aspect))
        cx = w / 2 + float(rng.uniform(-20.0, 20.0))
        cy = h / 2 + float(rng.uniform(-20.0, 20.0))
        anchor = GeoCoordinate(float(rng.uniform(*config.anchor_lat_deg)),
                               float(rng.uniform(-170.0, 170.0)))
        street = float(rng.uniform(0.0, 360.0))

        r = _look_at_rotation(camera, target, roll)
        if r[2, 0] < config.min_axis_depth or r[2, 1] < config.min_axis_depth \
                or abs(r[2, 2]) < config.min_axis_depth:
            continue
        t = -r @ camera
        if t[2] <= 0.5:
            continue
        k = Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy)
        pose = CameraPose(rotation=Rotation(r),
                          translation=Translation(float(t[0]), float(t[1]), float(t[2])))

        box = [WorldPoint(x, y, z)
               for x in (0.0, dims.length_m)
               for y in (0.0, dims.width_m)
               for z in (0.0, dims.height_m)]
        try:
            pixels = [project_to_pixel(k, pose, p).pixel for p in box]
        except Exception:
            continue
        if not all(16.0 <= p.u <= w - 16.0 and 16.0 <= p.v <= h - 16.0 for p in pixels):
            continue

        km = k.matrix()
        vps = [km @ r[:, i] for i in range(3)]
        vp_px = [(v[0] / v[2], v[1] / v[2]) for v in vps]
        area2 = abs((vp_px[1][0] - vp_px[0][0]) * (vp_px[2][1] - vp_px[0][1])
                    - (vp_px[2][0] - vp_px[0][0]) * (vp_px[1][1] - vp_px[0][1]))
        if area2 / 2.0 < config.min_triangle_area_px2:
            continue

        theta = math.radians(street)
        north = camera[0] * math.cos(theta) + camera[1] * math.sin(theta)
        east = camera[0] * math.sin(theta) - camera[1] * math.cos(theta)
        camera_geo = local_meters_to_geo(anchor, float(north), float(east))
        return SyntheticScene(
            intrinsics=k,
            pose=pose,
            camera_geo=camera_geo,
            camera_height_m=height,
            car_dims=dims,
            car_yaw_deg=0.0,
            street_bearing_deg=street,
            anchor_geo=anchor,
            image_size=config.image_size,
            seed=seed,
        )
    raise Unsatisfiable(f"no valid scene for seed {seed} within "
                        f"{MAX_GENERATION_ATTEMPTS} attempts")


def _axis_line_templates(dims: CarDimensions, axis: int, rng: np.random.Generator,
                         spread: float = 1.0) -> list[tuple[np.ndarray, np.ndarray]]:
    """World segments parallel to one car axis.

    Mixes car-box edges with longer environment features aligned with the
    car (road edges and lane markings for the ground axes, building
    rooflines and poles at height), which is what annotators actually
    trace; the long features are what keeps the vanishing points stable
    under pixel noise.  `spread` scales how far the environment features
    sit from the car, widening the pencil fan for dense edgelet scenes.
    """
    L, W, H = dims.length_m, dims.width_m, dims.height_m
    jit = lambda s: float(rng.uniform(-s, s))
    sp = spread
    lines = []
    if axis == 0:
        # Car sill/roof edges, road edge and lane marking, and building
        # rooflines running along the street.
        for y0, z0, t0, t1 in [
            (0.0, 0.0, -0.5, L + 0.5),
            (W, 0.0, -0.5, L + 0.5),
            (0.0, H, -0.3, L + 0.3),
            (W + sp * (2.5 + jit(1.0)), 0.0, -9.0 + jit(2.0), L + 11.0 + jit(3.0)),
            (-sp * (1.5 + jit(0.5)), 0.0, -8.0 + jit(2.0), L + 10.0 + jit(3.0)),
            (W + sp * (4.0 + jit(1.0)), 0.0, -6.0 + jit(2.0), L + 8.0 + jit(2.0)),
            (W + sp * (4.5 + jit(1.0)), sp * (7.0 + jit(1.5)), -7.0 + jit(2.0), L + 9.0 + jit(2.0)),
            (-sp * (2.5 + jit(0.8)), sp * (5.0 + jit(1.5)), -6.0 + jit(2.0), L + 8.0 + jit(2.0)),
        ]:
            lines.append((np.array([t0, y0, z0]), np.array([t1, y0, z0])))
    elif axis == 1:
        # Car front/rear edges, crosswalk stripes, a side road edge, and a
        # cross-street facade edge at height.
        for x0, z0, t0, t1 in [
            (0.0, 0.0, -0.4, W + 0.4),
            (L, 0.0, -0.4, W + 0.4),
            (0.0, H, -0.2, W + 0.2),
            (L + sp * (2.5 + jit(1.0)), 0.0, -5.0 + jit(1.5), W + 7.0 + jit(2.0)),
            (-sp * (2.0 + jit(0.7)), 0.0, -4.0 + jit(1.5), W + 6.0 + jit(2.0)),
            (L + sp * (5.0 + jit(1.5)), 0.0, -4.0 + jit(1.0), W + 5.0 + jit(1.5)),
            (L + sp * (3.5 + jit(1.0)), sp * (6.0 + jit(1.5)), -4.5 + jit(1.5), W + 6.0 + jit(1.5)),
            (-sp * (3.0 + jit(1.0)), sp * (5.0 + jit(1.5)), -3.5 + jit(1.0), W + 5.0 + jit(1.5)),
        ]:
            lines.append((np.array([x0, t0, z0]), np.array([x0, t1, z0])))
    else:
        # Car pillars, then building corners and a signpost.
        for x0, y0, t1 in [
            (0.0, 0.0, H + 0.2),
            (L, 0.0, H + 0.2),
            (0.0, W, H + 0.2),
            (L + sp * (3.0 + jit(1.0)), W + sp * (3.5 + jit(1.0)), 11.0 + jit(3.0)),
            (-sp * (2.5 + jit(0.8)), W + sp * (2.5 + jit(0.8)), 10.0 + jit(3.0)),
            (L + sp * (1.5 + jit(0.5)), -sp * (1.5 + jit(0.5)), 6.0 + jit(1.5)),
        ]:
            lines.append((np.array([x0, y0, 0.0]), np.array([x0, y0, t1])))
    return lines


def _noisy_pixel(p: PixelPoint, sigma: float, rng: np.random.Generator) -> PixelPoint:
    if sigma == 0:
        return p
    return PixelPoint(p.u + float(rng.normal(0.0, sigma)),
                      p.v + float(rng.normal(0.0, sigma)))


def _pick_diverse_segments(projected: list[tuple[PixelPoint, PixelPoint]],
                           count: int) -> list[tuple[PixelPoint, PixelPoint]]:
    """Greedy max-min angular spread: annotators favor lines that fan out
    visibly in the image, and a nearly parallel pair pins the vanishing
    point no better than a single line."""
    if len(projected) <= count:
        return projected

    def angle(pair):
        a, b = pair
        return math.atan2(b.v - a.v, b.u - a.u) % math.pi

    angles = [angle(p) for p in projected]
    chosen = [0]  # longest-first ordering is already randomized upstream
    while len(chosen) < count:
        best_idx, best_gap = None, -1.0
        for i in range(len(projected)):
            if i in chosen:
                continue
            gap = min(abs((angles[i] - angles[j] + math.pi / 2) % math.pi - math.pi / 2)
                      for j in chosen)
            if gap > best_gap:
                best_gap, best_idx = gap, i
        chosen.append(best_idx)
    return [projected[i] for i in sorted(chosen)]


def _project_world_segment(scene: SyntheticScene, a_w: np.ndarray, b_w: np.ndarray
                           ) -> Optional[tuple[PixelPoint, PixelPoint]]:
    """Project a world segment, clipped to what an annotator can draw.

    The world extent is cut until both endpoints project inside the image
    (annotations happen on the visible frame, not beyond it) with a small
    margin.  Returns None when no usable extent remains.
    """
    margin = 6.0

    def visible(p: PixelPoint) -> bool:
        return scene.in_image(p, margin=margin)

    def projectable(t: float) -> Optional[PixelPoint]:
        w = a_w + t * (b_w - a_w)
        try:
            return project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(*w)).pixel
        except Exception:
            return None

    # Bisection from each end toward the largest visible sub-extent.
    lo, hi = 0.0, 1.0
    pa, pb = projectable(lo), projectable(hi)
    for _ in range(18):
        if pa is not None and visible(pa):
            break
        lo = lo + (hi - lo) * 0.12
        pa = projectable(lo)
    for _ in range(18):
        if pb is not None and visible(pb) and hi > lo:
            break
        hi = hi - (hi - lo) * 0.12
        pb = projectable(hi)
    if pa is None or pb is None or not (visible(pa) and visible(pb)):
        return None
    if pa.distance_to(pb) < 8.0:
        return None
    return pa, pb


def render_bundles(scene: SyntheticScene, annotator_count: int, noise_px: float,
                   seed: int = 0, lines_per_axis: int = 4,
                   include_refs: bool = False) -> list[AnnotationBundle]:
    """Render noisy annotation bundles, one per simulated annotator.

    Projects the car axes and per-axis parallel lines exactly, then
    perturbs every endpoint with N(0, noise_px^2) per coordinate.  With
    include_refs, two visible street-level reference points with exact
    geodetic coordinates (and noisy pixels) are attached.
    """
    if noise_px < 0:
        raise ValueError("noise_px must be >= 0")
    k, pose = scene.intrinsics, scene.pose
    dims = scene.car_dims
    bundles = []
    seeds = np.random.SeedSequence(entropy=(seed, scene.seed)).spawn(annotator_count)
    for idx in range(annotator_count):
        rng = np.random.default_rng(seeds[idx])
        axes = CarAxesAnnotation(
            origin=_noisy_pixel(project_to_pixel(k, pose, WorldPoint(0, 0, 0)).pixel,
                                noise_px, rng),
            x_end=_noisy_pixel(project_to_pixel(k, pose, WorldPoint(dims.length_m, 0, 0)).pixel,
                               noise_px, rng),
            y_end=_noisy_pixel(project_to_pixel(k, pose, WorldPoint(0, dims.width_m, 0)).pixel,
                               noise_px, rng),
            z_end=_noisy_pixel(project_to_pixel(k, pose, WorldPoint(0, 0, dims.height_m)).pixel,
                               noise_px, rng),
        )
        parallel_sets = []
        for axis in range(3):
            templates = _axis_line_templates(dims, axis, rng)
            order = rng.permutation(len(templates))
            projected = []
            for ti in order:
                pair = _project_world_segment(scene, *templates[int(ti)])
                if pair is not None:
                    projected.append(pair)
            chosen = _pick_diverse_segments(projected, lines_per_axis)
            segments = [LineSegment2D(_noisy_pixel(pa, noise_px, rng),
                                      _noisy_pixel(pb, noise_px, rng))
                        for pa, pb in chosen]
            parallel_sets.append(tuple(segments))
        refs = None
        if include_refs:
            refs = tuple(_reference_points(scene, noise_px, rng))
        bundles.append(AnnotationBundle(
            image_id=f"scene-{scene.seed}",
            image_size=scene.image_size,
            annotator_id=f"annotator-{idx:02d}",
            car_axes=axes,
            parallel_sets=tuple(parallel_sets),
            dims=dims,
            refs=refs,
        ))
    return bundles


def _reference_points(scene: SyntheticScene, noise_px: float,
                      rng: np.random.Generator) -> list[PixelGeoRef]:
    """Two visible ground points with exact geo and noisy pixels.

    Candidates sit on the street around the car; the pair is chosen with a
    solid horizontal pixel separation so the ordering rule is stable.
    """
    dims = scene.car_dims
    candidates = []
    for _ in range(200):
        x = float(rng.uniform(-4.0, dims.length_m + 14.0))
        y = float(rng.uniform(-3.0, dims.width_m + 10.0))
        if -0.5 <= x <= dims.length_m + 0.5 and -0.5 <= y <= dims.width_m + 0.5:
            continue  # inside or hugging the car box
        try:
            pixel = project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(x, y, 0.0)).pixel
        except Exception:
            continue
        if scene.in_image(pixel, margin=12.0):
            candidates.append((x, y, pixel))
        if len(candidates) >= 24:
            break
    best = None
    for i in range(len(candidates)):
        for j in range(i + 1, len(candidates)):
            xi, yi, pi = candidates[i]
            xj, yj, pj = candidates[j]
            du = abs(pi.u - pj.u)
            ground = math.hypot(xi - xj, yi - yj)
            if du >= 40.0 and ground >= 4.0:
                score = du + ground
                if best is None or score > best[0]:
                    best = (score, i, j)
    if best is None:
        raise Unsatisfiable("could not place two separated reference points in view")
    out = []
    for idx in (best[1], best[2]):
        x, y, pixel = candidates[idx]
        out.append(PixelGeoRef(pixel=_noisy_pixel(pixel, noise_px, rng),
                               geo=scene.world_to_geo(x, y)))
    return out


def render_edgelets(scene: SyntheticScene, count: int, noise_deg: float,
                    outlier_fraction: float, seed: int = 0,
                    line_spread: float = 1.0) -> list[Edgelet]:
    """Edgelets along the projected world-axis lines plus uniform outliers.

    The outlier count is exactly round(outlier_fraction * count); inliers
    are split round-robin across the three axes.  line_spread widens the
    sampled parallel-structure offsets (dense urban scenes offer aligned
    edges well away from the car).
    """
    if not (0 <= outlier_fraction < 1):
        raise ValueError("outlier_fraction must be in [0, 1)")
    rng = np.random.default_rng(seed)
    k, pose = scene.intrinsics, scene.pose
    w, h = scene.image_size
    outlier_count = round(outlier_fraction * count)
    inlier_count = count - outlier_count
    edgelets = []
    for i in range(inlier_count):
        axis = i % 3
        for _ in range(100):
            templates = _axis_line_templates(scene.car_dims, axis, rng, spread=line_spread)
            a_w, b_w = templates[int(rng.integers(len(templates)))]
            t = float(rng.uniform(0.15, 0.85))
            p_w = a_w + t * (b_w - a_w)
            q_w = a_w + (t + 0.02) * (b_w - a_w)
            try:
                p = project_to_pixel(k, pose, WorldPoint(*p_w)).pixel
                q = project_to_pixel(k, pose, WorldPoint(*q_w)).pixel
            except Exception:
                continue
            if not scene.in_image(p, margin=4.0):
                continue
            d = np.array([q.u - p.u, q.v - p.v])
            norm = np.linalg.norm(d)
            if norm < 1e-9:
                continue
            d = d / norm
            angle = math.atan2(d[1], d[0]) + math.radians(float(rng.normal(0.0, noise_deg)))
            edgelets.append(Edgelet(center=p,
                                    direction=(math.cos(angle), math.sin(angle)),
                                    strength=float(rng.uniform(0.5, 1.0))))
            break
        else:
            raise Unsatisfiable("could not place an in-view edgelet")
    for _ in range(outlier_count):
        angle = float(rng.uniform(0.0, math.pi))
        edgelets.append(Edgelet(
            center=PixelPoint(float(rng.uniform(0, w)), float(rng.uniform(0, h))),
            direction=(math.cos(angle), math.sin(angle)),
            strength=float(rng.uniform(0.0, 1.0)),
        ))
    order = rng.permutation(len(edgelets))
    return [edgelets[int(i)] for i in order]


def axis_hint_segments(scene: SyntheticScene) -> list[LineSegment2D]:
    """Exact car-axis segments (origin to each endpoint) as RANSAC hints."""
    k, pose = scene.intrinsics, scene.pose
    dims = scene.car_dims
    origin = project_to_pixel(k, pose, WorldPoint(0, 0, 0)).pixel
    hints = []
    for end in (WorldPoint(dims.length_m, 0, 0), WorldPoint(0, dims.width_m, 0),
                WorldPoint(0, 0, dims.height_m)):
        hints.append(LineSegment2D(origin, project_to_pixel(k, pose, end).pixel))
    return hints


# --- intersection / landmark scene extensions -----------------------------------


def add_intersection(scene: SyntheticScene, visible_count: int,
                     seed: int = 0) -> SyntheticScene:
    """Attach a rectangular intersection with `visible_count` visible corners.

    The two street widths differ so distance matching is informative.  The
    visible corners are consecutive in clockwise map order, and for the
    single-corner case the side leaving the visible corner (clockwise) runs
    along the camera street, matching the bearing convention of the
    resolver.  Raises Unsatisfiable when no placement fits the view.
    """
    rng = np.random.default_rng((seed, scene.seed, 17))
    cam = scene.camera_position()
    for _ in range(500):
        width_x = float(rng.uniform(16.0, 26.0))
        width_y = float(rng.uniform(8.0, 13.0))
        # The camera is mounted near the intersection: place its center a
        # bounded ground distance from the camera along the view direction,
        # wherever the car happens to be down the street.
        heading = math.atan2(-cam.y, -cam.x)  # from camera through the car
        reach = float(rng.uniform(12.0, 28.0))
        center = np.array([cam.x + reach * math.cos(heading),
                           cam.y + reach * math.sin(heading)])
        corners_world = [
            WorldPoint(center[0] + sx * width_x / 2, center[1] + sy * width_y / 2, 0.0)
            for sx, sy in ((1, 1), (1, -1), (-1, -1), (-1, 1))
        ]
        geos = [scene.world_to_geo(c.x, c.y) for c in corners_world]
        # Clockwise on the map = ascending bearing from the centroid.
        center_geo = scene.world_to_geo(float(center[0]), float(center[1]))
        def bearing_of(g: GeoCoordinate) -> float:
            dlat = g.lat - center_geo.lat
            dlon = (g.lon - center_geo.lon) * math.cos(math.radians(center_geo.lat))
            return math.atan2(dlon, dlat)
        order = sorted(range(4), key=lambda i: bearing_of(geos[i]))
        geos_cw = [geos[i] for i in order]
        world_cw = [corners_world[i] for i in order]

        visible = []
        for i, c in enumerate(world_cw):
            try:
                p = project_to_pixel(scene.intrinsics, scene.pose, c).pixel
            except Exception:
                continue
            if scene.in_image(p, margin=10.0):
                visible.append(i)
        runs = []
        for start in range(4):
            run = [(start + j) % 4 for j in range(visible_count)]
            if all(i in visible for i in run):
                runs.append(tuple(run))
        if not runs:
            continue
        if visible_count == 1:
            # Keep only corners whose clockwise-next side runs along the
            # camera street (world x-axis), the resolver's bearing choice.
            good = []
            for (c,) in runs:
                a, b = world_cw[c], world_cw[(c + 1) % 4]
                if abs(a.y - b.y) < 1e-9:  # side parallel to world x
                    good.append((c,))
            runs = good
            if not runs:
                continue
        chosen = runs[int(rng.integers(len(runs)))]
        truth = IntersectionTruth(
            corner_geos=tuple(geos_cw),
            corner_world=tuple(world_cw),
            visible_indices=chosen,
        )
        return replace(scene, intersection=truth)
    raise Unsatisfiable("no intersection placement fits the camera view")


def render_intersection_context(scene: SyntheticScene, noise_px: float,
                                seed: int = 0) -> IntersectionContext:
    """The annotated IntersectionContext for a scene with intersection truth."""
    truth = scene.intersection
    if truth is None:
        raise ValueError("scene has no intersection ground truth")
    rng = np.random.default_rng((seed, scene.seed, 23))
    pixels = []
    for i in truth.visible_indices:
        exact = project_to_pixel(scene.intrinsics, scene.pose, truth.corner_world[i]).pixel
        pixels.append(_noisy_pixel(exact, noise_px, rng))
    return IntersectionContext(corner_geos=truth.corner_geos,
                               corner_pixels=tuple(pixels))


def add_landmark(scene: SyntheticScene, size_m: tuple[float, float] = (20.0, 20.0),
                 geo_tag_at_centroid: bool = True, seed: int = 0) -> SyntheticScene:
    """Attach a rectangular building across the street from the camera.

    The front face is parallel to the street (world x) and faces the
    camera; the footprint is stored clockwise on the map.  The face
    midpoint is sampled by back-projecting a visible pixel onto the ground
    so the building always lands inside the view.
    """
    from .sensors import pixel_to_ground

    rng = np.random.default_rng((seed, scene.seed, 31))
    w, h = scene.image_size
    for _ in range(500):
        bl, bw = size_m
        probe = PixelPoint(float(rng.uniform(0.25 * w, 0.75 * w)),
                           float(rng.uniform(0.2 * h, 0.8 * h)))
        try:
            g = pixel_to_ground(scene.intrinsics, scene.pose, probe)
        except Exception:
            continue
        if g.y < scene.car_dims.width_m + 1.5 or math.hypot(g.x, g.y) > 90.0:
            continue  # must sit across the street, within plausible range
        x0, y0 = g.x - bl / 2, g.y
        corners = [
            WorldPoint(x0, y0, 0.0),
            WorldPoint(x0 + bl, y0, 0.0),
            WorldPoint(x0 + bl, y0 + bw, 0.0),
            WorldPoint(x0, y0 + bw, 0.0),
        ]
        face_mid = WorldPoint(x0 + bl / 2, y0, 0.0)
        try:
            p = project_to_pixel(scene.intrinsics, scene.pose, face_mid).pixel
        except Exception:
            continue
        if not scene.in_image(p, margin=12.0):
            continue
        front = []
        for i in (0, 1):
            try:
                cp = project_to_pixel(scene.intrinsics, scene.pose, corners[i]).pixel
            except Exception:
                break
            if not scene.in_image(cp, margin=10.0):
                break
            front.append(i)
        if len(front) != 2:
            continue
        if geo_tag_at_centroid:
            tag = scene.world_to_geo(x0 + bl / 2, y0 + bw / 2)
        else:
            tag = scene.world_to_geo(x0 + float(rng.uniform(0.2, 0.8)) * bl,
                                     y0 + float(rng.uniform(0.2, 0.8)) * bw)
        geos = [scene.world_to_geo(c.x, c.y) for c in corners]
        # World order above is counterclockwise on the map (y is 90 degrees
        # counterclockwise of x in world coords but clockwise in compass
        # terms), so reverse into clockwise map order.
        order = [0, 3, 2, 1]
        truth = LandmarkTruth(
            geo_tag=tag,
            footprint_geos=tuple(geos[i] for i in order),
            footprint_world=tuple(corners[i] for i in order),
            face_mid_world=face_mid,
            front_corner_indices=(0, 3),
            street_bearing_deg=scene.street_bearing_deg,
        )
        return replace(scene, landmark=truth)
    raise Unsatisfiable("no landmark placement fits the camera view")


def render_landmark_context(scene: SyntheticScene, mode: str, noise_px: float,
                            seed: int = 0) -> LandmarkContext:
    """The annotated LandmarkContext for a scene with landmark truth."""
    truth = scene.landmark
    if truth is None:
        raise ValueError("scene has no landmark ground truth")
    rng = np.random.default_rng((seed, scene.seed, 37))
    if mode == "face_center":
        exact = project_to_pixel(scene.intrinsics, scene.pose, truth.face_mid_world).pixel
        pixels = (_noisy_pixel(exact, noise_px, rng),)
    elif mode == "corner":
        pixels = tuple(
            _noisy_pixel(project_to_pixel(scene.intrinsics, scene.pose,
                                          truth.footprint_world[i]).pixel, noise_px, rng)
            for i in truth.front_corner_indices)
    else:
        raise ValueError(f"unknown landmark mode {mode!r}")
    return LandmarkContext(
        geo_tag=truth.geo_tag,
        footprint=truth.footprint_geos,
        mode=mode,
        annotated_pixels=pixels,
        street_bearing_deg=truth.street_bearing_deg,
    )


# --- error reporting ---------------------------------------------------------


@dataclass(frozen=True)
class LocationEstimate:
    """One trial's estimate; either field may be absent."""

    position: Optional[WorldPoint] = None
    geo: Optional[GeoCoordinate] = None


def nearest_rank_percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile (no interpolation), p in (0, 100]."""
    if not values:
        raise LengthMismatch("no values for percentile computation")
    if not (0 < p <= 100):
        raise ValueError(f"percentile {p} outside (0, 100]")
    ordered = sorted(values)
    rank = max(1, math.ceil(p / 100.0 * len(ordered)))
    return ordered[rank - 1]


@dataclass(frozen=True)
class ErrorReport:
    """Per-trial errors plus nearest-rank percentiles (50/80/90/95/100)."""

    position_errors_m: tuple[float, ...]
    height_errors_m: tuple[float, ...]
    absolute_errors_m: tuple[float, ...]
    position_percentiles: dict = field(default_factory=dict)
    height_percentiles: dict = field(default_factory=dict)
    absolute_percentiles: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "position_errors_m": list(self.position_errors_m),
            "height_errors_m": list(self.height_errors_m),
            "absolute_errors_m": list(self.absolute_errors_m),
            "position_percentiles": {str(k): v for k, v in self.position_percentiles.items()},
            "height_percentiles": {str(k): v for k, v in self.height_percentiles.items()},
            "absolute_percentiles": {str(k): v for k, v in self.absolute_percentiles.items()},
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_table(self) -> str:
        lines = [f"{'pct':>5}  {'position_m':>12}  {'height_m':>12}  {'absolute_m':>12}"]
        for p in PERCENTILE_LEVELS:
            cells = []
            for d in (self.position_percentiles, self.height_percentiles,
                      self.absolute_percentiles):
                cells.append(f"{d[p]:12.4f}" if p in d else f"{'-':>12}")
            lines.append(f"{p:>5}  " + "  ".join(cells))
        return "\n".join(lines) + "\n"


def evaluate_errors(estimates: Sequence[LocationEstimate],
                    scenes: Sequence[SyntheticScene]) -> ErrorReport:
    """Score estimates against their scenes' ground truth.

    Position error is Euclidean in the local meter frame, height is the
    |dz| component, and absolute error is the flat-earth distance between
    the estimated and true geodetic positions.  Raises LengthMismatch on
    unequal list lengths.
    """
    if len(estimates) != len(scenes):
        raise LengthMismatch(f"{len(estimates)} estimates vs {len(scenes)} scenes")
    pos, hgt, geo = [], [], []
    for est, scene in zip(estimates, scenes):
        if est.position is not None:
            truth = scene.camera_position()
            pos.append(est.position.distance_to(truth))
            hgt.append(abs(est.position.z - scene.camera_height_m))
        if est.geo is not None:
            geo.append(geo_distance_m(est.geo, scene.camera_geo))

    def pcts(values: list[float]) -> dict:
        if not values:
            return {}
        return {p: nearest_rank_percentile(values, p) for p in PERCENTILE_LEVELS}

    return ErrorReport(
        position_errors_m=tuple(pos),
        height_errors_m=tuple(hgt),
        absolute_errors_m=tuple(geo),
        position_percentiles=pcts(pos),
        height_percentiles=pcts(hgt),
        absolute_percentiles=pcts(geo),
    )
