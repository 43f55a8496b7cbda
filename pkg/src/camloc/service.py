"""Stateless HTTP service exposing the pipeline to the annotation UI.

Every response is a pure function of the request body; the UI owns all
in-progress annotation state.  Errors are reported uniformly as

    {"code": "...", "message": "...", "field_path": "..." | null}

with HTTP 400 for schema problems and 422 for estimation failures.

Endpoints (JSON bodies; bundle documents follow the annotations schema):
  GET  /api/v1/health
  POST /api/v1/vanishing-points   {"parallel_sets": {"x": [...], ...}}
  POST /api/v1/relative           {"bundle": {...} | "bundles": [...], "dims"?, "cluster_radius_m"?}
  POST /api/v1/absolute           relative body + "refs" | "intersection" | "landmark",
                                  "street_bearing_deg"?
  POST /api/v1/sensors/scale      {"intrinsics", "rotation", "translation", "points": [p1, p2]}
  POST /api/v1/sensors/height     {..., "base": [u, v], "top": [u, v]}
  POST /api/v1/sensors/speed      {..., "track": {"fps": n, "samples": [[[u, v], frame], ...]}}
"""

from __future__ import annotations

import json

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse

from .annotations import parse_bundle
from .context import IntersectionContext, LandmarkContext
from .errors import CamlocError, SchemaViolation
from .extrinsics import DEFAULT_CLUSTER_RADIUS_M, CarDimensions
from .pipeline import run_pipeline
from .sensors import virtual_clinometer, virtual_radar, virtual_scale
from .vanishing import LineSegment2D, VanishingPoint, VanishingTriple, estimate_vp, \
    orthocenter_image_center
from . import wire

app = FastAPI(title="camloc service", version="1.0")


def _error_response(exc: CamlocError, status: int) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={
            "code": exc.code,
            "message": str(exc),
            "field_path": getattr(exc, "field_path", None),
        },
    )


@app.exception_handler(CamlocError)
async def camloc_error_handler(_request, exc: CamlocError):
    status = 400 if isinstance(exc, SchemaViolation) else 422
    return _error_response(exc, status)


@app.get("/api/v1/health")
def health() -> dict:
    return {"status": "ok"}


def _segments_from_doc(doc, path: str) -> list[LineSegment2D]:
    if not isinstance(doc, list):
        raise SchemaViolation(path, "expected an array of segments")
    segments = []
    for i, seg in enumerate(doc):
        if not (isinstance(seg, list) and len(seg) == 2):
            raise SchemaViolation(f"{path}[{i}]", "expected [[u,v],[u,v]]")
        segments.append(LineSegment2D(
            wire.pixel_from_doc(seg[0], f"{path}[{i}][0]"),
            wire.pixel_from_doc(seg[1], f"{path}[{i}][1]"),
        ))
    return segments


def _vp_doc(vp: VanishingPoint) -> dict:
    doc: dict = {"finite": vp.finite, "homogeneous": list(vp.h)}
    if vp.finite:
        doc["point"] = [vp.inhomogeneous.u, vp.inhomogeneous.v]
    return doc


@app.post("/api/v1/vanishing-points")
def vanishing_points(payload: dict = Body(...)) -> dict:
    """Per-axis VPs for whatever sets are present, plus the orthocenter.

    Partial input is fine: axes with fewer than two segments come back as
    null, per-axis estimation failures come back as {"error": ...} hints,
    and the orthocenter appears once all three VPs are finite.
    """
    sets = payload.get("parallel_sets")
    if not isinstance(sets, dict):
        raise SchemaViolation("parallel_sets", "expected object with x/y/z arrays")
    unknown = set(sets) - {"x", "y", "z"}
    if unknown:
        raise SchemaViolation(f"parallel_sets.{sorted(unknown)[0]}", "unknown axis")
    out: dict = {"vanishing_points": {}, "orthocenter": None, "hints": []}
    vps: dict[str, VanishingPoint] = {}
    for axis in ("x", "y", "z"):
        if axis not in sets:
            out["vanishing_points"][axis] = None
            continue
        segments = _segments_from_doc(sets[axis], f"parallel_sets.{axis}")
        if len(segments) < 2:
            out["vanishing_points"][axis] = None
            out["hints"].append(f"{axis}-set needs at least 2 segments")
            continue
        try:
            vp = estimate_vp(segments)
        except CamlocError as exc:
            out["vanishing_points"][axis] = {"error": {"code": exc.code, "message": str(exc)}}
            out["hints"].append(f"{axis}-set: {exc}")
            continue
        vps[axis] = vp
        out["vanishing_points"][axis] = _vp_doc(vp)
        if not vp.finite:
            out["hints"].append(
                f"{axis}-set lines are nearly parallel in the image; draw a longer line")
    if len(vps) == 3 and all(vp.finite for vp in vps.values()):
        try:
            triple = VanishingTriple(vx=vps["x"], vy=vps["y"], vz=vps["z"])
            center = orthocenter_image_center(triple)
            out["orthocenter"] = [center.u, center.v]
        except CamlocError as exc:
            out["hints"].append(f"orthocenter: {exc}")
    return out


def _bundles_from_payload(payload: dict) -> list:
    if "bundle" in payload:
        docs = [payload["bundle"]]
    elif "bundles" in payload:
        docs = payload["bundles"]
        if not isinstance(docs, list):
            raise SchemaViolation("bundles", "expected an array of bundle documents")
    else:
        raise SchemaViolation("bundle", "missing bundle document")
    return [parse_bundle(json.dumps(doc)) for doc in docs]


def _dims_from_payload(payload: dict) -> CarDimensions | None:
    if "dims" not in payload:
        return None  # fall through to each bundle's own dims
    doc = payload["dims"]
    return CarDimensions(
        length_m=wire._number(doc, "length_m", "dims"),
        width_m=wire._number(doc, "width_m", "dims"),
        height_m=wire._number(doc, "height_m", "dims"),
    )


@app.post("/api/v1/relative")
def relative(payload: dict = Body(...)) -> dict:
    bundles = _bundles_from_payload(payload)
    result = run_pipeline(
        bundles,
        dims=_dims_from_payload(payload),
        cluster_radius_m=payload.get("cluster_radius_m", DEFAULT_CLUSTER_RADIUS_M),
    )
    return wire.result_to_doc(result)


@app.post("/api/v1/absolute")
def absolute(payload: dict = Body(...)) -> dict:
    bundles = _bundles_from_payload(payload)
    refs = None
    intersection = None
    landmark = None
    if "refs" in payload:
        refs = wire.refs_from_doc(payload["refs"])
    elif "intersection" in payload:
        doc = payload["intersection"]
        if not isinstance(doc, dict):
            raise SchemaViolation("intersection", "expected object")
        intersection = IntersectionContext(
            corner_geos=tuple(wire.geo_from_doc(g, f"intersection.corner_geos[{i}]")
                              for i, g in enumerate(doc.get("corner_geos", []))),
            corner_pixels=tuple(wire.pixel_from_doc(p, f"intersection.corner_pixels[{i}]")
                                for i, p in enumerate(doc.get("corner_pixels", []))),
        )
    elif "landmark" in payload:
        doc = payload["landmark"]
        if not isinstance(doc, dict):
            raise SchemaViolation("landmark", "expected object")
        landmark = LandmarkContext(
            geo_tag=wire.geo_from_doc(doc.get("geo_tag"), "landmark.geo_tag"),
            footprint=tuple(wire.geo_from_doc(g, f"landmark.footprint[{i}]")
                            for i, g in enumerate(doc.get("footprint", []))),
            mode=doc.get("mode", "face_center"),
            annotated_pixels=tuple(
                wire.pixel_from_doc(p, f"landmark.annotated_pixels[{i}]")
                for i, p in enumerate(doc.get("annotated_pixels", []))),
            street_bearing_deg=doc.get("street_bearing_deg"),
        )
    else:
        # Fall back to context carried inside the first bundle.
        first = bundles[0]
        refs = first.refs
        intersection = first.intersection
        landmark = first.landmark
        if not (refs or intersection or landmark):
            raise SchemaViolation("refs", "no refs, intersection, or landmark supplied")
    result = run_pipeline(
        bundles,
        dims=_dims_from_payload(payload),
        refs=refs,
        intersection=intersection,
        landmark=landmark,
        street_bearing_deg=payload.get("street_bearing_deg"),
        cluster_radius_m=payload.get("cluster_radius_m", DEFAULT_CLUSTER_RADIUS_M),
    )
    return wire.result_to_doc(result)


def _calibration_from_payload(payload: dict):
    k = wire.intrinsics_from_doc(payload.get("intrinsics"), "intrinsics")
    pose = wire.pose_from_doc(payload)
    return k, pose


@app.post("/api/v1/sensors/scale")
def sensor_scale(payload: dict = Body(...)) -> dict:
    k, pose = _calibration_from_payload(payload)
    points = payload.get("points")
    if not (isinstance(points, list) and len(points) == 2):
        raise SchemaViolation("points", "expected [p1, p2]")
    p1 = wire.pixel_from_doc(points[0], "points[0]")
    p2 = wire.pixel_from_doc(points[1], "points[1]")
    return {"value_m": virtual_scale(k, pose, p1, p2)}


@app.post("/api/v1/sensors/height")
def sensor_height(payload: dict = Body(...)) -> dict:
    k, pose = _calibration_from_payload(payload)
    base = wire.pixel_from_doc(payload.get("base"), "base")
    top = wire.pixel_from_doc(payload.get("top"), "top")
    return {"value_m": virtual_clinometer(k, pose, base, top)}


@app.post("/api/v1/sensors/speed")
def sensor_speed(payload: dict = Body(...)) -> dict:
    k, pose = _calibration_from_payload(payload)
    track = wire.track_from_doc(payload.get("track"))
    return {"value_kmh": virtual_radar(k, pose, track)}
