"""Annotation bundle schema, parsing, validation, and selection heuristics.

BUNDLE DOCUMENT SCHEMA (version 1)
==================================
A bundle is one annotator's complete markup of one image, as UTF-8 JSON::

    {
      "version": 1,
      "image_id": "cam-0042",
      "image_size": [1280, 720],
      "annotator_id": "annotator-03",
      "car_axes": {
        "origin": [u, v], "x_end": [u, v], "y_end": [u, v], "z_end": [u, v]
      },
      "parallel_sets": {
        "x": [[[u, v], [u, v]], ...],   # >= 2 segments per axis
        "y": [...],
        "z": [...]
      },
      "dims": {"length_m": 4.5, "width_m": 1.8, "height_m": 1.5},   # optional
      "refs": [{"pixel": [u, v], "geo": {"lat": d, "lon": d}}, ...], # optional
      "intersection": {                                              # optional
        "corner_geos": [{"lat": d, "lon": d}, ...],   # clockwise on the map
        "corner_pixels": [[u, v], ...]                # clockwise in the image
      },
      "landmark": {                                                  # optional
        "geo_tag": {"lat": d, "lon": d},
        "footprint": [{"lat": d, "lon": d}, ...],
        "mode": "face_center" | "corner",
        "annotated_pixels": [[u, v], ...],
        "street_bearing_deg": d                       # optional
      }
    }

Unknown fields are rejected (the schema is versioned instead).  Pixels are
[u, v] pairs with the origin at the top-left corner, v down.  Serialization
is canonical: schema key order, two-space indent, integral numbers written
without a decimal point, and a trailing newline -- parse(serialize(b))
round-trips bit-exactly, and non-integral values must stay within the
exponent-free decimal range (|x| in [1e-4, 1e15]) so independent writers
can reproduce the bytes.

MAP_SCHEMA_NOTES: intersection and landmark blocks double as the offline
map extract format; populate corner_geos / footprint / geo_tag from any map
source in clockwise order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from .context import IntersectionContext, LandmarkContext
from .errors import InvariantViolation, SchemaViolation, EmptyInput
from .extrinsics import CarAxesAnnotation, CarDimensions
from .geodesy import GeoCoordinate, PixelGeoRef
from .geometry import PixelPoint
from .vanishing import LineSegment2D

SCHEMA_VERSION = 1

# A parallel set is inconsistent when its segment directions span more than
# this undirected angle.
MAX_SET_SPREAD_DEG = 60.0

# Fraction of annotated pixels outside the image frame above which the
# out-of-frame flag fires.
MAX_OUT_OF_FRAME_FRACTION = 0.5


@dataclass(frozen=True)
class AnnotationBundle:
    """One annotator's full markup of one image."""

    image_id: str
    image_size: tuple[int, int]
    annotator_id: str
    car_axes: CarAxesAnnotation
    parallel_sets: tuple[tuple[LineSegment2D, ...], ...]
    dims: Optional[CarDimensions] = None
    refs: Optional[tuple[PixelGeoRef, ...]] = None
    intersection: Optional[IntersectionContext] = None
    landmark: Optional[LandmarkContext] = None

    def __post_init__(self):
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise InvariantViolation("AnnotationBundle.image_size")
        if len(self.parallel_sets) != 3:
            raise InvariantViolation("AnnotationBundle.parallel_sets",
                                     "exactly three parallel sets (x, y, z) required")
        for axis, segs in zip("xyz", self.parallel_sets):
            if len(segs) < 2:
                raise InvariantViolation("AnnotationBundle.min_segments",
                                         f"parallel set {axis!r} needs >= 2 segments")
        for p in self.all_pixels():
            if not (-1.5 * w <= p.u <= 2.5 * w and -1.5 * h <= p.v <= 2.5 * h):
                raise InvariantViolation(
                    "AnnotationBundle.pixel_bounds",
                    f"pixel ({p.u}, {p.v}) outside 4x image bounds for {w}x{h}")

    def all_pixels(self) -> list[PixelPoint]:
        pixels = [self.car_axes.origin, self.car_axes.x_end,
                  self.car_axes.y_end, self.car_axes.z_end]
        for segs in self.parallel_sets:
            for s in segs:
                pixels.extend((s.a, s.b))
        if self.refs:
            pixels.extend(r.pixel for r in self.refs)
        if self.intersection:
            pixels.extend(self.intersection.corner_pixels)
        if self.landmark:
            pixels.extend(self.landmark.annotated_pixels)
        return pixels


@dataclass(frozen=True)
class BoundingBox:
    """Detector output: axis-aligned box plus class label."""

    min: PixelPoint
    max: PixelPoint
    label: str

    def __post_init__(self):
        if not (self.min.u < self.max.u and self.min.v < self.max.v):
            raise InvariantViolation("BoundingBox.ordering",
                                     "min must be strictly less than max componentwise")

    def area(self) -> float:
        return (self.max.u - self.min.u) * (self.max.v - self.min.v)

    def center(self) -> PixelPoint:
        return PixelPoint((self.min.u + self.max.u) / 2.0, (self.min.v + self.max.v) / 2.0)


@dataclass(frozen=True)
class ValidityReport:
    """validate_bundle output: flags, out-of-frame fraction, verdict."""

    flags: tuple[str, ...]
    out_of_frame_fraction: float

    @property
    def valid(self) -> bool:
        return not self.flags


# --- parsing ------------------------------------------------------------------


class _Reader:
    """Walks a decoded JSON tree with field-path error reporting."""

    def __init__(self, doc: dict):
        self.doc = doc

    @staticmethod
    def _path(*parts) -> str:
        return ".".join(str(p) for p in parts)

    def require(self, obj: dict, key: str, path: str):
        if not isinstance(obj, dict):
            raise SchemaViolation(path, f"expected object at {path}")
        if key not in obj:
            raise SchemaViolation(self._path(path, key) if path else key,
                                  f"missing required field {key!r}")
        return obj[key]

    @staticmethod
    def number(value, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaViolation(path, f"expected number at {path}")
        if not math.isfinite(value):
            raise SchemaViolation(path, f"non-finite number at {path}")
        return float(value)

    @staticmethod
    def string(value, path: str) -> str:
        if not isinstance(value, str):
            raise SchemaViolation(path, f"expected string at {path}")
        return value

    @staticmethod
    def array(value, path: str) -> list:
        if not isinstance(value, list):
            raise SchemaViolation(path, f"expected array at {path}")
        return value

    def pixel(self, value, path: str) -> PixelPoint:
        arr = self.array(value, path)
        if len(arr) != 2:
            raise SchemaViolation(path, f"pixel at {path} must be a [u, v] pair")
        return PixelPoint(self.number(arr[0], f"{path}[0]"),
                          self.number(arr[1], f"{path}[1]"))

    def geo(self, value, path: str) -> GeoCoordinate:
        obj = self.object(value, path, allowed={"lat", "lon"})
        return GeoCoordinate(self.number(self.require(obj, "lat", path), f"{path}.lat"),
                             self.number(self.require(obj, "lon", path), f"{path}.lon"))

    def segment(self, value, path: str) -> LineSegment2D:
        arr = self.array(value, path)
        if len(arr) != 2:
            raise SchemaViolation(path, f"segment at {path} must be [[u,v],[u,v]]")
        return LineSegment2D(self.pixel(arr[0], f"{path}[0]"),
                             self.pixel(arr[1], f"{path}[1]"))

    def object(self, value, path: str, allowed: set[str]) -> dict:
        if not isinstance(value, dict):
            raise SchemaViolation(path, f"expected object at {path}")
        unknown = set(value) - allowed
        if unknown:
            raise SchemaViolation(self._path(path, sorted(unknown)[0]) if path
                                  else sorted(unknown)[0],
                                  f"unknown field {sorted(unknown)[0]!r}")
        return value


def parse_bundle(document: bytes | str) -> AnnotationBundle:
    """Parse and fully validate a bundle document.

    Raises SchemaViolation (with the offending field path) for structural
    problems and InvariantViolation (with the invariant name) when values
    violate a domain invariant.  serialize_bundle(parse_bundle(doc)) == doc
    for canonical documents.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"not valid JSON: {exc}") from exc

    rd = _Reader(doc)
    top_allowed = {"version", "image_id", "image_size", "annotator_id", "car_axes",
                   "parallel_sets", "dims", "refs", "intersection", "landmark"}
    rd.object(doc, "", allowed=top_allowed)

    version = rd.require(doc, "version", "")
    if version != SCHEMA_VERSION:
        raise SchemaViolation("version", f"unsupported schema version {version!r}")

    image_id = rd.string(rd.require(doc, "image_id", ""), "image_id")
    size_arr = rd.array(rd.require(doc, "image_size", ""), "image_size")
    if len(size_arr) != 2:
        raise SchemaViolation("image_size", "image_size must be [width, height]")
    width = rd.number(size_arr[0], "image_size[0]")
    height = rd.number(size_arr[1], "image_size[1]")
    annotator_id = rd.string(rd.require(doc, "annotator_id", ""), "annotator_id")

    axes_obj = rd.object(rd.require(doc, "car_axes", ""), "car_axes",
                         allowed={"origin", "x_end", "y_end", "z_end"})
    car_axes = CarAxesAnnotation(
        origin=rd.pixel(rd.require(axes_obj, "origin", "car_axes"), "car_axes.origin"),
        x_end=rd.pixel(rd.require(axes_obj, "x_end", "car_axes"), "car_axes.x_end"),
        y_end=rd.pixel(rd.require(axes_obj, "y_end", "car_axes"), "car_axes.y_end"),
        z_end=rd.pixel(rd.require(axes_obj, "z_end", "car_axes"), "car_axes.z_end"),
    )

    sets_obj = rd.object(rd.require(doc, "parallel_sets", ""), "parallel_sets",
                         allowed={"x", "y", "z"})
    parallel_sets = []
    for axis in ("x", "y", "z"):
        seg_arr = rd.array(rd.require(sets_obj, axis, "parallel_sets"),
                           f"parallel_sets.{axis}")
        parallel_sets.append(tuple(
            rd.segment(s, f"parallel_sets.{axis}[{i}]") for i, s in enumerate(seg_arr)))

    dims = None
    if "dims" in doc:
        dims_obj = rd.object(doc["dims"], "dims",
                             allowed={"length_m", "width_m", "height_m"})
        dims = CarDimensions(
            length_m=rd.number(rd.require(dims_obj, "length_m", "dims"), "dims.length_m"),
            width_m=rd.number(rd.require(dims_obj, "width_m", "dims"), "dims.width_m"),
            height_m=rd.number(rd.require(dims_obj, "height_m", "dims"), "dims.height_m"),
        )

    refs = None
    if "refs" in doc:
        ref_list = []
        for i, item in enumerate(rd.array(doc["refs"], "refs")):
            obj = rd.object(item, f"refs[{i}]", allowed={"pixel", "geo"})
            ref_list.append(PixelGeoRef(
                pixel=rd.pixel(rd.require(obj, "pixel", f"refs[{i}]"), f"refs[{i}].pixel"),
                geo=rd.geo(rd.require(obj, "geo", f"refs[{i}]"), f"refs[{i}].geo"),
            ))
        refs = tuple(ref_list)

    intersection = None
    if "intersection" in doc:
        obj = rd.object(doc["intersection"], "intersection",
                        allowed={"corner_geos", "corner_pixels"})
        geos = tuple(rd.geo(g, f"intersection.corner_geos[{i}]")
                     for i, g in enumerate(rd.array(
                         rd.require(obj, "corner_geos", "intersection"),
                         "intersection.corner_geos")))
        pixels = tuple(rd.pixel(p, f"intersection.corner_pixels[{i}]")
                       for i, p in enumerate(rd.array(
                           rd.require(obj, "corner_pixels", "intersection"),
                           "intersection.corner_pixels")))
        intersection = IntersectionContext(corner_geos=geos, corner_pixels=pixels)

    landmark = None
    if "landmark" in doc:
        obj = rd.object(doc["landmark"], "landmark",
                        allowed={"geo_tag", "footprint", "mode", "annotated_pixels",
                                 "street_bearing_deg"})
        footprint = tuple(rd.geo(g, f"landmark.footprint[{i}]")
                          for i, g in enumerate(rd.array(
                              rd.require(obj, "footprint", "landmark"),
                              "landmark.footprint")))
        pixels = tuple(rd.pixel(p, f"landmark.annotated_pixels[{i}]")
                       for i, p in enumerate(rd.array(
                           rd.require(obj, "annotated_pixels", "landmark"),
                           "landmark.annotated_pixels")))
        bearing = None
        if "street_bearing_deg" in obj:
            bearing = rd.number(obj["street_bearing_deg"], "landmark.street_bearing_deg")
        landmark = LandmarkContext(
            geo_tag=rd.geo(rd.require(obj, "geo_tag", "landmark"), "landmark.geo_tag"),
            footprint=footprint,
            mode=rd.string(rd.require(obj, "mode", "landmark"), "landmark.mode"),
            annotated_pixels=pixels,
            street_bearing_deg=bearing,
        )

    return AnnotationBundle(
        image_id=image_id,
        image_size=(int(width), int(height)),
        annotator_id=annotator_id,
        car_axes=car_axes,
        parallel_sets=tuple(parallel_sets),
        dims=dims,
        refs=refs,
        intersection=intersection,
        landmark=landmark,
    )


# --- serialization --------------------------------------------------------------


def _num(x: float):
    """Canonical JSON number: integral floats written without a decimal point."""
    if isinstance(x, float) and x.is_integer() and abs(x) <= 1e15:
        return int(x)
    return x


def _pixel_doc(p: PixelPoint) -> list:
    return [_num(p.u), _num(p.v)]


def _geo_doc(g: GeoCoordinate) -> dict:
    return {"lat": _num(g.lat), "lon": _num(g.lon)}


def bundle_to_document(b: AnnotationBundle) -> dict:
    """The canonical JSON object tree for a bundle."""
    doc = {
        "version": SCHEMA_VERSION,
        "image_id": b.image_id,
        "image_size": [b.image_size[0], b.image_size[1]],
        "annotator_id": b.annotator_id,
        "car_axes": {
            "origin": _pixel_doc(b.car_axes.origin),
            "x_end": _pixel_doc(b.car_axes.x_end),
            "y_end": _pixel_doc(b.car_axes.y_end),
            "z_end": _pixel_doc(b.car_axes.z_end),
        },
        "parallel_sets": {
            axis: [[_pixel_doc(s.a), _pixel_doc(s.b)] for s in segs]
            for axis, segs in zip("xyz", b.parallel_sets)
        },
    }
    if b.dims is not None:
        doc["dims"] = {"length_m": _num(b.dims.length_m),
                       "width_m": _num(b.dims.width_m),
                       "height_m": _num(b.dims.height_m)}
    if b.refs is not None:
        doc["refs"] = [{"pixel": _pixel_doc(r.pixel), "geo": _geo_doc(r.geo)}
                       for r in b.refs]
    if b.intersection is not None:
        doc["intersection"] = {
            "corner_geos": [_geo_doc(g) for g in b.intersection.corner_geos],
            "corner_pixels": [_pixel_doc(p) for p in b.intersection.corner_pixels],
        }
    if b.landmark is not None:
        lm = {
            "geo_tag": _geo_doc(b.landmark.geo_tag),
            "footprint": [_geo_doc(g) for g in b.landmark.footprint],
            "mode": b.landmark.mode,
            "annotated_pixels": [_pixel_doc(p) for p in b.landmark.annotated_pixels],
        }
        if b.landmark.street_bearing_deg is not None:
            lm["street_bearing_deg"] = _num(b.landmark.street_bearing_deg)
        doc["landmark"] = lm
    return doc


def serialize_bundle(b: AnnotationBundle) -> bytes:
    """Canonical byte serialization (see module docstring)."""
    return (json.dumps(bundle_to_document(b), indent=2) + "\n").encode("utf-8")


# --- validation -------------------------------------------------------------------


def _max_pairwise_angle_deg(segments) -> float:
    worst = 0.0
    dirs = [s.direction() for s in segments]
    for i in range(len(dirs)):
        for j in range(i + 1, len(dirs)):
            c = abs(float(dirs[i] @ dirs[j]))
            worst = max(worst, math.degrees(math.acos(min(1.0, c))))
    return worst


def _pencil_inconsistent(segments) -> bool:
    """Wide-spread sets are fine only when they converge like a pencil.

    A strongly oblique view fans a legitimate parallel set across much of
    the image, but its vanishing point sits well outside the annotated
    cloud; scribbles and perpendicular strokes intersect inside it.
    """
    from .errors import DegenerateGeometry
    from .vanishing import estimate_vp

    try:
        vp = estimate_vp(segments)
    except DegenerateGeometry:
        return True
    if not vp.finite:
        return True  # near-parallel directions cannot also span > 60 deg
    import numpy as np

    pts = np.array([[p.u, p.v] for s in segments for p in (s.a, s.b)])
    centroid = pts.mean(axis=0)
    spread = float(np.linalg.norm(pts - centroid, axis=1).mean())
    distance = math.hypot(vp.inhomogeneous.u - centroid[0],
                          vp.inhomogeneous.v - centroid[1])
    # Calibrated on the oracle: legitimate oblique pencils measure >= 1.17,
    # perpendicular strokes ~0.7.
    return distance < 1.0 * spread


def validate_bundle(b: AnnotationBundle) -> ValidityReport:
    """Geometric spam screen: a report, never an exception.

    Flags: 'axes-degenerate' when the four car-axis points are collinear,
    'parallel-set-inconsistent' when any set's segment directions span more
    than MAX_SET_SPREAD_DEG without converging like a pencil (oblique views
    legitimately fan wider, but toward a vanishing point well outside the
    strokes), and 'out-of-frame' when more than half of all annotated
    pixels fall outside the image.  Any flag makes the bundle invalid.
    """
    flags = []
    pts = [b.car_axes.origin, b.car_axes.x_end, b.car_axes.y_end, b.car_axes.z_end]
    max_area2 = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            for l in range(j + 1, 4):
                area2 = abs((pts[j].u - pts[i].u) * (pts[l].v - pts[i].v)
                            - (pts[l].u - pts[i].u) * (pts[j].v - pts[i].v))
                max_area2 = max(max_area2, area2)
    if max_area2 / 2.0 <= 1.0:
        flags.append("axes-degenerate")

    for axis, segs in zip("xyz", b.parallel_sets):
        if _max_pairwise_angle_deg(segs) > MAX_SET_SPREAD_DEG and _pencil_inconsistent(segs):
            flags.append("parallel-set-inconsistent")
            break

    w, h = b.image_size
    pixels = b.all_pixels()
    outside = sum(1 for p in pixels if not (0 <= p.u <= w and 0 <= p.v <= h))
    fraction = outside / len(pixels)
    if fraction > MAX_OUT_OF_FRAME_FRACTION:
        flags.append("out-of-frame")

    return ValidityReport(flags=tuple(flags), out_of_frame_fraction=fraction)


def select_car_bbox(boxes, image_size) -> BoundingBox:
    """Pick the detection most likely to show all three car dimensions.

    Argmax of area over distance from the box center to the image center
    (floored at 1 px), first index winning ties.
    """
    boxes = list(boxes)
    if not boxes:
        raise EmptyInput("no bounding boxes")
    w, h = image_size
    image_center = PixelPoint(w / 2.0, h / 2.0)

    def score(box: BoundingBox) -> float:
        return box.area() / max(box.center().distance_to(image_center), 1.0)

    best_index = max(range(len(boxes)), key=lambda i: (score(boxes[i]), -i))
    return boxes[best_index]
