"""JSON wire-format converters shared by the CLI and the HTTP service.

The pose/result documents produced by `camloc relative` are consumed by
`camloc sensors ...` and by the service's sensor endpoints, so the exact
field layout lives here in one place::

    {
      "intrinsics": {"fx": px, "fy": px, "cx": px, "cy": px},
      "rotation": [[r11, r12, r13], [r21, r22, r23], [r31, r32, r33]],
      "translation": {"tx": m, "ty": m, "tz": m},
      "camera_position": {"x": m, "y": m, "z": m},
      "quality": {...}, "warnings": [...],
      "absolute_candidates": [
        {"lat": deg, "lon": deg, "height_m": m, "branch": "...",
         "distance_to_ref_m": m}
      ]
    }
"""

from __future__ import annotations

from .errors import SchemaViolation
from .geodesy import CandidateLocation, GeoCoordinate, PixelGeoRef
from .geometry import CameraPose, Intrinsics, PixelPoint, Rotation, Translation
from .pipeline import PipelineResult
from .sensors import PixelTrack


def _number(doc, key: str, path: str) -> float:
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaViolation(f"{path}.{key}" if path else key,
                              f"missing required field {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(f"{path}.{key}" if path else key,
                              f"expected number for {key!r}")
    return float(value)


def pixel_from_doc(doc, path: str) -> PixelPoint:
    if not (isinstance(doc, list) and len(doc) == 2):
        raise SchemaViolation(path, f"expected [u, v] pair at {path}")
    for i, c in enumerate(doc):
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise SchemaViolation(f"{path}[{i}]", "expected number")
    return PixelPoint(float(doc[0]), float(doc[1]))


def geo_from_doc(doc, path: str) -> GeoCoordinate:
    return GeoCoordinate(_number(doc, "lat", path), _number(doc, "lon", path))


def refs_from_doc(doc, path: str = "refs") -> list[PixelGeoRef]:
    if not isinstance(doc, list):
        raise SchemaViolation(path, "expected an array of references")
    out = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise SchemaViolation(f"{path}[{i}]", "expected object")
        out.append(PixelGeoRef(
            pixel=pixel_from_doc(item.get("pixel"), f"{path}[{i}].pixel"),
            geo=geo_from_doc(item.get("geo"), f"{path}[{i}].geo"),
        ))
    return out


def intrinsics_to_doc(k: Intrinsics) -> dict:
    return {"fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy}


def intrinsics_from_doc(doc, path: str = "intrinsics") -> Intrinsics:
    return Intrinsics(fx=_number(doc, "fx", path), fy=_number(doc, "fy", path),
                      cx=_number(doc, "cx", path), cy=_number(doc, "cy", path))


def pose_to_doc(pose: CameraPose) -> dict:
    t = pose.translation
    return {
        "rotation": pose.rotation.matrix.tolist(),
        "translation": {"tx": t.tx, "ty": t.ty, "tz": t.tz},
    }


def pose_from_doc(doc, path: str = "") -> CameraPose:
    rot = doc.get("rotation") if isinstance(doc, dict) else None
    if (not isinstance(rot, list) or len(rot) != 3
            or any(not isinstance(row, list) or len(row) != 3 for row in rot)):
        raise SchemaViolation(f"{path}.rotation" if path else "rotation",
                              "expected a 3x3 matrix")
    tdoc = doc.get("translation")
    t = Translation(_number(tdoc, "tx", "translation"),
                    _number(tdoc, "ty", "translation"),
                    _number(tdoc, "tz", "translation"))
    return CameraPose(rotation=Rotation(rot), translation=t)


def candidate_to_doc(c: CandidateLocation) -> dict:
    doc = {
        "lat": c.geo.lat,
        "lon": c.geo.lon,
        "height_m": c.height_m,
        "branch": c.branch,
        "distance_to_ref_m": c.distance_to_ref_m,
    }
    if c.height_spread_m:
        doc["height_spread_m"] = c.height_spread_m
    return doc


def result_to_doc(result: PipelineResult) -> dict:
    pos = result.camera_position
    doc = {
        "intrinsics": intrinsics_to_doc(result.intrinsics),
        **pose_to_doc(result.pose),
        "camera_position": {"x": pos.x, "y": pos.y, "z": pos.z},
        "camera_height_m": pos.z,
        "quality": result.quality,
        "warnings": result.warnings,
        "absolute_candidates": [candidate_to_doc(c) for c in result.absolute_candidates],
    }
    return doc


def track_from_doc(doc, path: str = "track") -> PixelTrack:
    if not isinstance(doc, dict):
        raise SchemaViolation(path, "expected object with fps and samples")
    fps = _number(doc, "fps", path)
    samples_doc = doc.get("samples")
    if not isinstance(samples_doc, list):
        raise SchemaViolation(f"{path}.samples", "expected an array of [pixel, frame]")
    samples = []
    for i, item in enumerate(samples_doc):
        if not (isinstance(item, list) and len(item) == 2):
            raise SchemaViolation(f"{path}.samples[{i}]", "expected [pixel, frame]")
        pixel = pixel_from_doc(item[0], f"{path}.samples[{i}][0]")
        frame = item[1]
        if isinstance(frame, bool) or not isinstance(frame, int):
            raise SchemaViolation(f"{path}.samples[{i}][1]", "expected integer frame index")
        samples.append((pixel, frame))
    return PixelTrack(samples=tuple(samples), fps=fps)
