"""Coarse-context resolution: road intersections and landmark buildings.

A camera known to sit near a mapped intersection, or to see a geo-tagged
landmark, yields pixel-to-GPS references only up to an association
ambiguity: which annotated corner is which map corner?  This module
enumerates the candidate sets that ambiguity structure produces:

  - one visible intersection corner: 4 corner assignments x 4 bearing
    branches = 16 candidates;
  - two or more visible corners: cyclic corner mappings ranked by how well
    the image-measured inter-corner distances match the mapped ones, top
    two mappings solved exactly against two references -> 2 candidates;
  - landmark face-center: the relative vector to the annotated face
    midpoint is inflated by (1 + d_tau / d_rel), where d_tau is the mean
    distance from the geo tag to the four faces of the footprint bounding
    box, then treated as a single-reference problem;
  - landmark corners: annotated corners are matched against footprint
    vertices (all cyclic-order-preserving assignments, both directions)
    and solved with one- or two-reference geodesy.

Map data arrives as an offline extract (see annotations.MAP_SCHEMA_NOTES),
never from a live service, so every enumeration is deterministic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .errors import (
    FootprintTooComplex,
    GeotagOutsideFootprint,
    InvariantViolation,
    MappingInfeasible,
    NoIntersection,
    AmbiguousOrdering,
    Singular,
)
from .geodesy import (
    CandidateLocation,
    GeoCoordinate,
    PixelGeoRef,
    absolute_from_one_ref,
    absolute_from_two_refs,
    geo_distance_m,
    geo_to_local_meters,
)
from .geometry import CameraPose, Intrinsics, PixelPoint, WorldPoint, camera_position_world
from .sensors import pixel_to_ground

# Footprints beyond this vertex count must be simplified before matching.
MAX_FOOTPRINT_VERTICES = 12


def _signed_area(points: Sequence[tuple[float, float]]) -> float:
    total = 0.0
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return total / 2.0


@dataclass(frozen=True)
class IntersectionContext:
    """Mapped intersection corners plus the annotated visible subset.

    Both lists run clockwise: the geos clockwise on the map, the pixels
    clockwise in the image.  Visible corners are assumed consecutive along
    the intersection boundary.
    """

    corner_geos: tuple[GeoCoordinate, ...]
    corner_pixels: tuple[PixelPoint, ...]

    def __post_init__(self):
        n = len(self.corner_geos)
        if n < 3:
            raise InvariantViolation("IntersectionContext.corners",
                                     f"need >= 3 mapped corners, got {n}")
        if not (1 <= len(self.corner_pixels) <= n):
            raise InvariantViolation("IntersectionContext.visible",
                                     "visible pixel count must be in [1, corner count]")
        # Map clockwise (north up, east right) means negative shoelace area
        # in (east, north) coordinates.
        local = [geo_to_local_meters(self.corner_geos[0], g) for g in self.corner_geos]
        if _signed_area([(e, n_) for n_, e in local]) > 0:
            raise InvariantViolation("IntersectionContext.clockwise_geos",
                                     "mapped corners are not clockwise")
        if len(self.corner_pixels) >= 3:
            px = [(p.u, p.v) for p in self.corner_pixels]
            # Image clockwise with v down means positive shoelace in (u, v).
            if _signed_area(px) < 0:
                raise InvariantViolation("IntersectionContext.clockwise_pixels",
                                         "annotated corners are not clockwise")


@dataclass(frozen=True)
class LandmarkContext:
    """A geo-tagged building footprint with face or corner annotations.

    street_bearing_deg is the bearing of the street the visible face fronts
    (available from map data); when absent it falls back to the bearing of
    the footprint's longest edge.
    """

    geo_tag: GeoCoordinate
    footprint: tuple[GeoCoordinate, ...]
    mode: str
    annotated_pixels: tuple[PixelPoint, ...]
    street_bearing_deg: Optional[float] = None

    def __post_init__(self):
        if len(self.footprint) < 3:
            raise InvariantViolation("LandmarkContext.footprint",
                                     "footprint needs >= 3 vertices")
        if self.mode not in ("face_center", "corner"):
            raise InvariantViolation("LandmarkContext.mode", f"unknown mode {self.mode!r}")
        if not self.annotated_pixels:
            raise InvariantViolation("LandmarkContext.pixels", "need >= 1 annotated pixel")

    def effective_street_bearing(self) -> float:
        if self.street_bearing_deg is not None:
            return self.street_bearing_deg
        return _longest_edge_bearing(self.footprint)


@dataclass(frozen=True)
class CornerMapping:
    """One cyclic alignment of visible corners onto mapped corners."""

    offset: int
    direction: int
    score: float
    corner_count: int

    def map_index(self, visible_index: int) -> int:
        return (self.offset + self.direction * visible_index) % self.corner_count


def match_corner_sequences(estimated_dists: Sequence[float],
                           map_dists_cyclic: Sequence[float]) -> list[CornerMapping]:
    """Rank cyclic offset/direction alignments by distance-sequence fit.

    For each offset and direction, the estimated successive distances are
    compared against the aligned mapped side lengths; score is the sum of
    absolute differences, ranked ascending.  Ties break toward the smallest
    offset, forward direction first.
    """
    if not estimated_dists or not map_dists_cyclic:
        raise InvariantViolation("match_corner_sequences.empty", "both lists must be non-empty")
    n = len(map_dists_cyclic)
    mappings = []
    for offset in range(n):
        for direction in (1, -1):
            score = 0.0
            for j, est in enumerate(estimated_dists):
                if direction == 1:
                    side = map_dists_cyclic[(offset + j) % n]
                else:
                    side = map_dists_cyclic[(offset - j - 1) % n]
                score += abs(est - side)
            mappings.append(CornerMapping(offset=offset, direction=direction,
                                          score=score, corner_count=n))
    mappings.sort(key=lambda m: (m.score, m.offset, 0 if m.direction == 1 else 1))
    return mappings


def _bearing_deg(origin: GeoCoordinate, target: GeoCoordinate) -> float:
    north, east = geo_to_local_meters(origin, target)
    return math.degrees(math.atan2(east, north))


def _longest_edge_bearing(polygon: Sequence[GeoCoordinate]) -> float:
    best_len = -1.0
    best_bearing = 0.0
    for i in range(len(polygon)):
        a, b = polygon[i], polygon[(i + 1) % len(polygon)]
        length = geo_distance_m(a, b)
        if length > best_len:
            best_len = length
            best_bearing = _bearing_deg(a, b)
    return best_bearing


def enumerate_intersection_candidates(ctx: IntersectionContext,
                                      k: Intrinsics,
                                      pose: CameraPose) -> list[CandidateLocation]:
    """Candidate camera positions from a known road intersection.

    One visible corner cannot be associated with any particular mapped
    corner, so every assignment is enumerated (4 corners x 4 bearing
    branches = 16 candidates on a four-corner intersection).  With two or
    more visible corners the inter-corner distances measured on the ground
    plane pick the two best cyclic mappings, each solved exactly through
    the two-reference path.

    Raises MappingInfeasible when no retained mapping admits a circle
    intersection.
    """
    cam = camera_position_world(pose)
    grounds = [pixel_to_ground(k, pose, p) for p in ctx.corner_pixels]
    rels = [WorldPoint(cam.x - g.x, cam.y - g.y, cam.z - g.z) for g in grounds]
    n = len(ctx.corner_geos)

    if len(ctx.corner_pixels) == 1:
        candidates = []
        for c in range(n):
            street = _bearing_deg(ctx.corner_geos[c], ctx.corner_geos[(c + 1) % n])
            for cand in absolute_from_one_ref(rels[0], ctx.corner_geos[c], street):
                candidates.append(CandidateLocation(
                    geo=cand.geo, height_m=cand.height_m,
                    branch=f"corner{c}:{cand.branch}",
                    distance_to_ref_m=cand.distance_to_ref_m))
        return candidates

    estimated = [grounds[j].ground_distance_to(grounds[j + 1])
                 for j in range(len(grounds) - 1)]
    map_sides = [geo_distance_m(ctx.corner_geos[i], ctx.corner_geos[(i + 1) % n])
                 for i in range(n)]
    # Both corner lists are clockwise (image and map agree in orientation
    # for a ground plane seen from above), so only forward mappings are
    # geometrically possible; reversed ones would tie on symmetric
    # intersections and could evict the true mapping from the top two.
    ranked = [m for m in match_corner_sequences(estimated, map_sides) if m.direction == 1]

    candidates = []
    for mapping in ranked[:2]:
        ref1 = PixelGeoRef(ctx.corner_pixels[0], ctx.corner_geos[mapping.map_index(0)])
        ref2 = PixelGeoRef(ctx.corner_pixels[1], ctx.corner_geos[mapping.map_index(1)])
        try:
            cand = absolute_from_two_refs(ref1, ref2, rels[0], rels[1])
        except (NoIntersection, AmbiguousOrdering, Singular):
            continue
        sign = "+" if mapping.direction == 1 else "-"
        candidates.append(CandidateLocation(
            geo=cand.geo, height_m=cand.height_m,
            branch=f"mapping{mapping.offset}{sign}:{cand.branch}",
            distance_to_ref_m=cand.distance_to_ref_m,
            height_spread_m=cand.height_spread_m))
    if not candidates:
        raise MappingInfeasible("no corner mapping satisfies the circle feasibility conditions")
    return candidates


def _point_in_polygon(point: tuple[float, float],
                      polygon: Sequence[tuple[float, float]]) -> bool:
    x, y = point
    inside = False
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x_cross > x:
                inside = not inside
    return inside


def _face_distance_mean(ctx: LandmarkContext) -> float:
    """Mean distance from the geo tag to the four bounding-box faces (m)."""
    local = [geo_to_local_meters(ctx.geo_tag, v) for v in ctx.footprint]
    norths = [n for n, _ in local]
    easts = [e for _, e in local]
    if not _point_in_polygon((0.0, 0.0), [(n, e) for n, e in local]):
        warnings.warn("landmark geo tag lies outside its footprint; face-distance "
                      "compensation assumes an interior tag", GeotagOutsideFootprint)
    faces = (abs(min(norths)), abs(max(norths)), abs(min(easts)), abs(max(easts)))
    return sum(faces) / 4.0


def _cyclic_assignments(vertex_count: int, k: int) -> list[tuple[int, ...]]:
    """All order-preserving assignments of k annotated corners to vertices.

    Every rotation of every k-subset, in both traversal directions
    (duplicates removed), keeps the annotated cyclic order intact while
    allowing non-consecutive vertices, since small building faces are often
    invisible and annotated corners need not be adjacent in the footprint.
    """
    out = set()
    for combo in combinations(range(vertex_count), k):
        for start in range(k):
            forward = tuple(combo[(start + i) % k] for i in range(k))
            backward = tuple(combo[(start - i) % k] for i in range(k))
            out.add(forward)
            out.add(backward)
    return sorted(out)


def landmark_candidates(ctx: LandmarkContext,
                        k: Intrinsics,
                        pose: CameraPose) -> list[CandidateLocation]:
    """Candidate camera positions from a geo-tagged landmark building.

    face_center mode compensates for the tag sitting behind the visible
    face by inflating the planar relative vector by (1 + d_tau / d_rel),
    then enumerates the four bearing branches around the tag.  corner mode
    matches annotated corners to footprint vertices and solves via one- or
    two-reference geodesy, returning candidates in ranked order.
    """
    cam = camera_position_world(pose)
    grounds = [pixel_to_ground(k, pose, p) for p in ctx.annotated_pixels]
    rels = [WorldPoint(cam.x - g.x, cam.y - g.y, cam.z - g.z) for g in grounds]
    street = ctx.effective_street_bearing()

    if ctx.mode == "face_center":
        rel = rels[0]
        d_rel = math.hypot(rel.x, rel.y)
        d_tau = _face_distance_mean(ctx)
        factor = 1.0 + d_tau / d_rel if d_rel > 1e-9 else 1.0
        inflated = WorldPoint(rel.x * factor, rel.y * factor, rel.z)
        return [CandidateLocation(geo=c.geo, height_m=c.height_m,
                                  branch=f"face:{c.branch}",
                                  distance_to_ref_m=c.distance_to_ref_m)
                for c in absolute_from_one_ref(inflated, ctx.geo_tag, street)]

    vertices = ctx.footprint
    if len(vertices) > MAX_FOOTPRINT_VERTICES:
        raise FootprintTooComplex(
            f"{len(vertices)} footprint vertices exceed the cap of "
            f"{MAX_FOOTPRINT_VERTICES}; simplify the footprint")

    if len(ctx.annotated_pixels) == 1:
        candidates = []
        for vi, vertex in enumerate(vertices):
            for c in absolute_from_one_ref(rels[0], vertex, street):
                candidates.append(CandidateLocation(
                    geo=c.geo, height_m=c.height_m,
                    branch=f"vertex{vi}:{c.branch}",
                    distance_to_ref_m=c.distance_to_ref_m))
        return candidates

    estimated = [grounds[j].ground_distance_to(grounds[j + 1])
                 for j in range(len(grounds) - 1)]
    scored = []
    for assignment in _cyclic_assignments(len(vertices), len(ctx.annotated_pixels)):
        score = sum(abs(est - geo_distance_m(vertices[assignment[j]],
                                             vertices[assignment[j + 1]]))
                    for j, est in enumerate(estimated))
        scored.append((score, assignment))
    scored.sort(key=lambda item: (item[0], item[1]))

    candidates = []
    for score, assignment in scored:
        ref1 = PixelGeoRef(ctx.annotated_pixels[0], vertices[assignment[0]])
        ref2 = PixelGeoRef(ctx.annotated_pixels[1], vertices[assignment[1]])
        try:
            cand = absolute_from_two_refs(ref1, ref2, rels[0], rels[1])
        except (NoIntersection, AmbiguousOrdering, Singular):
            continue
        label = "-".join(str(v) for v in assignment)
        candidates.append(CandidateLocation(
            geo=cand.geo, height_m=cand.height_m,
            branch=f"vertices{label}:{cand.branch}",
            distance_to_ref_m=cand.distance_to_ref_m,
            height_spread_m=cand.height_spread_m))
    return candidates
