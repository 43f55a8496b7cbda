"""Flat-earth geodesy: bearings, candidate enumeration, circle intersection.

One degree of latitude spans 111111 m on the earth's surface; one degree of
longitude spans 111111 * cos(latitude) m.  Below roughly 2 km (far beyond
any street-camera range) the surface is treated as flat with these scale
factors, so a reference point plus a distance d and a bearing alpha
(clockwise from true north) determine a position:

    lat = lat_ref + d * cos(alpha) / 111111
    lon = lon_ref + d * sin(alpha) / (111111 * cos(lat_ref))

The camera bearing from a single reference is ambiguous four ways (street
direction and y-axis handedness are unknowable from the image), giving the
candidate set alpha = theta +/- 90 +/- phi.  Two references instead
intersect two range circles; the remaining mirror ambiguity is settled by
the left-to-right ordering of the reference pixels in the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    AmbiguousOrdering,
    InvariantViolation,
    NoIntersection,
    PolarSingularity,
    RangeExceeded,
    Singular,
)
from .geometry import PixelPoint, WorldPoint

# Meters per degree of latitude (10^7 m pole-to-equator over 90 degrees).
METERS_PER_DEGREE = 111111.0

# Flat-earth approximation ceiling for a single offset.
MAX_OFFSET_M = 2000.0

# Latitudes beyond this leave the longitude scale ill-conditioned.
MAX_REF_LATITUDE = 89.0

BRANCH_LABELS = ("+90+phi", "+90-phi", "-90+phi", "-90-phi")


@dataclass(frozen=True)
class GeoCoordinate:
    """Geodetic position in degrees; lon normalized to (-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvariantViolation("GeoCoordinate.finite")
        if not (-90.0 <= self.lat <= 90.0):
            raise InvariantViolation("GeoCoordinate.lat_range", f"lat={self.lat}")
        if not (-180.0 < self.lon <= 180.0):
            raise InvariantViolation("GeoCoordinate.lon_range", f"lon={self.lon}")


@dataclass(frozen=True)
class PixelGeoRef:
    """An image pixel whose ground position has known geodetic coordinates."""

    pixel: PixelPoint
    geo: GeoCoordinate


@dataclass(frozen=True)
class BearingSet:
    """The four candidate camera bearings from one reference point."""

    theta: float
    phi: float
    alphas: tuple[float, float, float, float]
    branches: tuple[str, str, str, str] = BRANCH_LABELS


@dataclass(frozen=True)
class CandidateLocation:
    """A hypothesized absolute camera position with its ambiguity branch."""

    geo: GeoCoordinate
    height_m: float
    branch: str
    distance_to_ref_m: float
    height_spread_m: float = 0.0

    def __post_init__(self):
        if self.distance_to_ref_m < 0:
            raise InvariantViolation("CandidateLocation.distance", "distance must be >= 0")


def normalize_bearing(deg: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    r = math.fmod(deg, 360.0)
    if r <= -180.0:
        r += 360.0
    elif r > 180.0:
        r -= 360.0
    return r


def normalize_longitude(deg: float) -> float:
    return normalize_bearing(deg)


def offset_geo(ref: GeoCoordinate, d_m: float, alpha_deg: float,
               max_range_m: float = MAX_OFFSET_M) -> GeoCoordinate:
    """Position d_m meters from ref along bearing alpha (clockwise from N).

    Raises RangeExceeded for d_m >= max_range_m (default 2000 m, the
    flat-earth regime) and PolarSingularity for references within 1 degree
    of a pole.  Callers exercising the raw formula beyond the regime (e.g.
    the one-degree sanity identities) may widen max_range_m explicitly.
    """
    if d_m >= max_range_m:
        raise RangeExceeded(f"offset {d_m} m exceeds the {max_range_m:.0f} m regime")
    if d_m < 0:
        raise InvariantViolation("offset_geo.distance", "distance must be >= 0")
    if abs(ref.lat) > MAX_REF_LATITUDE:
        raise PolarSingularity(f"reference latitude {ref.lat} too close to a pole")
    alpha = math.radians(alpha_deg)
    lat = ref.lat + (d_m * math.cos(alpha)) / METERS_PER_DEGREE
    lon = ref.lon + (d_m * math.sin(alpha)) / (METERS_PER_DEGREE * math.cos(math.radians(ref.lat)))
    return GeoCoordinate(lat, normalize_longitude(lon))


def geo_to_local_meters(ref: GeoCoordinate, point: GeoCoordinate,
                        cos_lat: float | None = None) -> tuple[float, float]:
    """(north, east) meters of `point` relative to `ref` (flat-earth inverse)."""
    if cos_lat is None:
        cos_lat = math.cos(math.radians(ref.lat))
    north = (point.lat - ref.lat) * METERS_PER_DEGREE
    east = (point.lon - ref.lon) * METERS_PER_DEGREE * cos_lat
    return north, east


def local_meters_to_geo(ref: GeoCoordinate, north_m: float, east_m: float,
                        cos_lat: float | None = None) -> GeoCoordinate:
    """Invert geo_to_local_meters around the same reference."""
    if cos_lat is None:
        cos_lat = math.cos(math.radians(ref.lat))
    lat = ref.lat + north_m / METERS_PER_DEGREE
    lon = ref.lon + east_m / (METERS_PER_DEGREE * cos_lat)
    return GeoCoordinate(lat, normalize_longitude(lon))


def geo_distance_m(a: GeoCoordinate, b: GeoCoordinate) -> float:
    """Flat-earth meters between two nearby positions (mean-latitude scale)."""
    cos_lat = math.cos(math.radians((a.lat + b.lat) / 2.0))
    north, east = geo_to_local_meters(a, b, cos_lat=cos_lat)
    return math.hypot(north, east)


def bearing_candidates(theta_deg: float, phi_deg: float) -> BearingSet:
    """The four-case bearing list alpha = theta +/- 90 +/- phi, normalized.

    theta is the street bearing (the geodetic direction the world x-axis
    aligns with, modulo 180) and phi the camera's angular position measured
    from the world y-axis toward the x-axis.  Duplicates are preserved with
    their branch labels.
    """
    if not (math.isfinite(theta_deg) and math.isfinite(phi_deg)):
        raise InvariantViolation("bearing_candidates.finite")
    alphas = (
        normalize_bearing(theta_deg + 90.0 + phi_deg),
        normalize_bearing(theta_deg + 90.0 - phi_deg),
        normalize_bearing(theta_deg - 90.0 + phi_deg),
        normalize_bearing(theta_deg - 90.0 - phi_deg),
    )
    return BearingSet(theta=theta_deg, phi=phi_deg, alphas=alphas)


def absolute_from_one_ref(rel_cam: WorldPoint, ref: GeoCoordinate,
                          street_bearing_deg: float) -> list[CandidateLocation]:
    """Four candidate camera positions from one reference ground point.

    rel_cam is the camera position relative to the reference point in world
    coordinates (z up).  phi = atan2(|dx|, |dy|) measures the camera off the
    world y-axis, so the four-case bearing list covers every combination of
    street direction and y-axis handedness; one branch always contains the
    true bearing.
    """
    d = math.hypot(rel_cam.x, rel_cam.y)
    phi = math.degrees(math.atan2(abs(rel_cam.x), abs(rel_cam.y)))
    bearings = bearing_candidates(street_bearing_deg, phi)
    return [
        CandidateLocation(
            geo=offset_geo(ref, d, alpha),
            height_m=rel_cam.z,
            branch=branch,
            distance_to_ref_m=d,
        )
        for alpha, branch in zip(bearings.alphas, bearings.branches)
    ]


def circle_intersection(d_m: float, d1_m: float, d2_m: float
                        ) -> tuple[tuple[float, float], tuple[float, float]]:
    """Intersection points of circles |P| = d1 and |P - (d, 0)| = d2.

        x = (d^2 - d2^2 + d1^2) / (2 d)
        y = +/- sqrt(4 d^2 d1^2 - (d^2 - d2^2 + d1^2)^2) / (2 d)

    Returns the (x, +y) point first.  Tangent configurations collapse both
    points onto y = 0 within tolerance; infeasible radii raise
    NoIntersection.
    """
    if d_m <= 0:
        raise InvariantViolation("circle_intersection.center_distance",
                                 f"d={d_m} must be > 0")
    tol = 1e-9 * max(1.0, d_m, d1_m, d2_m)
    if d_m > d1_m + d2_m + tol or d_m < abs(d1_m - d2_m) - tol:
        raise NoIntersection(
            f"circles with centers {d_m} m apart and radii ({d1_m}, {d2_m}) m do not meet")
    x = (d_m ** 2 - d2_m ** 2 + d1_m ** 2) / (2.0 * d_m)
    y_sq = (4.0 * d_m ** 2 * d1_m ** 2 - (d_m ** 2 - d2_m ** 2 + d1_m ** 2) ** 2) / (4.0 * d_m ** 2)
    y = math.sqrt(max(0.0, y_sq))
    return (x, y), (x, -y)


@dataclass(frozen=True)
class RefFrameTransform:
    """The 2D similarity-with-flip transform x' = p x + q y + r, y' = q x - p y + s.

    Maps local meters (ref1 at the origin, ref2 on the +x axis) to degrees.
    Note this form carries no cos(lat) anisotropy, so away from the equator
    it deviates from the offset_geo model at second order; the two-reference
    solver uses the flat-earth path and exposes this transform for parity.
    """

    p: float
    q: float
    r: float
    s: float

    def apply(self, x: float, y: float) -> GeoCoordinate:
        lat = self.p * x + self.q * y + self.r
        lon = self.q * x - self.p * y + self.s
        return GeoCoordinate(lat, normalize_longitude(lon))


def solve_ref_frame_transform(ref1: GeoCoordinate, ref2: GeoCoordinate,
                              d_m: float) -> RefFrameTransform:
    """Solve the 4x4 interpolation system for the local->geo transform.

    The constraints are transform(0, 0) = ref1 and transform(d, 0) = ref2,
    which pin (p, q, r, s) uniquely:  r = lat1, s = lon1,
    p = (lat2 - lat1) / d, q = (lon2 - lon1) / d.
    """
    if d_m < 1e-9:
        raise Singular(f"reference separation {d_m} m too small")
    return RefFrameTransform(
        p=(ref2.lat - ref1.lat) / d_m,
        q=(ref2.lon - ref1.lon) / d_m,
        r=ref1.lat,
        s=ref1.lon,
    )


def absolute_from_two_refs(ref1: PixelGeoRef, ref2: PixelGeoRef,
                           rel1: WorldPoint, rel2: WorldPoint) -> CandidateLocation:
    """Unique camera position from two reference points.

    rel1/rel2 are the camera positions relative to each reference ground
    point in world coordinates.  The two range circles are intersected in
    the local frame (ref1 at the origin, ref2 at (d, 0)); the mirror branch
    is chosen by the image ordering rule: when ref1 appears left of ref2
    (smaller u), the positive-y intersection is the camera.  The reported
    height is the mean of the two relative heights, with their spread kept
    as a diagnostic.

    Raises AmbiguousOrdering when the reference pixels are within 1 px in u
    and NoIntersection when the circle radii are infeasible.
    """
    du = ref2.pixel.u - ref1.pixel.u
    if abs(du) < 1.0:
        raise AmbiguousOrdering("reference pixels share the same image column")
    cos_lat = math.cos(math.radians((ref1.geo.lat + ref2.geo.lat) / 2.0))
    north, east = geo_to_local_meters(ref1.geo, ref2.geo, cos_lat=cos_lat)
    d = math.hypot(north, east)
    if d < 1e-9:
        raise Singular("reference points coincide")
    d1 = math.hypot(rel1.x, rel1.y)
    d2 = math.hypot(rel2.x, rel2.y)
    (x, y_pos), (_, y_neg) = circle_intersection(d, d1, d2)
    y = y_pos if du > 0 else y_neg
    # Local frame axes in (north, east) meters: x-hat toward ref2, y-hat 90
    # degrees clockwise of it (the orientation that makes the pixel ordering
    # rule pick the side of the line the camera actually stands on).
    off_north = (x * north - y * east) / d
    off_east = (x * east + y * north) / d
    geo = local_meters_to_geo(ref1.geo, off_north, off_east, cos_lat=cos_lat)
    return CandidateLocation(
        geo=geo,
        height_m=(rel1.z + rel2.z) / 2.0,
        branch="y+" if du > 0 else "y-",
        distance_to_ref_m=d1,
        height_spread_m=abs(rel1.z - rel2.z),
    )
