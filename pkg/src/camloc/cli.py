"""Batch command-line interface.

Exit codes enumerate error classes stably:
  0  success
  2  input problem (bad schema, bad flags, missing files)
  3  all bundles invalid
  4  geometry estimation failure
  5  geodesy / context infeasible
  6  other camloc error
"""

from __future__ import annotations

import glob
import json
import sys

import click

from .annotations import parse_bundle
from .context import IntersectionContext, LandmarkContext
from .errors import (
    AllBundlesInvalid,
    CamlocError,
    DegenerateGeometry,
    EmptyInput,
    InvariantViolation,
    MappingInfeasible,
    NegativeDepth,
    NoIntersection,
    NonPositiveFocal,
    NotARotation,
    ParallelProjection,
    PolarSingularity,
    RangeExceeded,
    SchemaViolation,
    Unsatisfiable,
)
from .extrinsics import DEFAULT_CLUSTER_RADIUS_M, CarDimensions
from .pipeline import run_pipeline
from .sensors import virtual_clinometer, virtual_radar, virtual_scale
from .sweep import run_config
from .synthetic import ErrorReport
from . import wire

_GEOMETRY_ERRORS = (DegenerateGeometry, NotARotation, NonPositiveFocal,
                    ParallelProjection, NegativeDepth)
_GEODESY_ERRORS = (NoIntersection, MappingInfeasible, RangeExceeded,
                   PolarSingularity, Unsatisfiable)


def _exit_code(exc: CamlocError) -> int:
    if isinstance(exc, (SchemaViolation, InvariantViolation, EmptyInput)):
        return 2
    if isinstance(exc, AllBundlesInvalid):
        return 3
    if isinstance(exc, _GEOMETRY_ERRORS):
        return 4
    if isinstance(exc, _GEODESY_ERRORS):
        return 5
    return 6


def _fail(exc: CamlocError) -> None:
    click.echo(f"error[{exc.code}]: {exc}", err=True)
    sys.exit(_exit_code(exc))


def _load_bundles(pattern: str) -> list:
    paths = sorted(glob.glob(pattern))
    if not paths:
        click.echo(f"error[empty_input]: no files match {pattern!r}", err=True)
        sys.exit(2)
    bundles = []
    for path in paths:
        with open(path, "rb") as fh:
            bundles.append(parse_bundle(fh.read()))
    return bundles


def _parse_dims(text: str | None) -> CarDimensions | None:
    if text is None:
        return None  # per-bundle dims, falling back to the standard sedan
    parts = text.split(",")
    if len(parts) != 3:
        click.echo("error[schema_violation]: --dims expects L,W,H in meters", err=True)
        sys.exit(2)
    return CarDimensions(length_m=float(parts[0]), width_m=float(parts[1]),
                         height_m=float(parts[2]))


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out is None or out == "-":
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


@click.group()
def main() -> None:
    """Single-image street camera localization from human annotations."""


@main.command()
@click.option("--bundles", "pattern", required=True, help="Glob of bundle JSON files.")
@click.option("--dims", default=None, help="Car dimensions L,W,H in meters.")
@click.option("--cluster-radius", default=DEFAULT_CLUSTER_RADIUS_M, type=float,
              show_default=True, help="Aggregation cluster radius (m).")
@click.option("--out", default=None, help="Output JSON path (default stdout).")
def relative(pattern: str, dims: str | None, cluster_radius: float, out: str | None) -> None:
    """Estimate intrinsics, pose, and relative camera position."""
    try:
        result = run_pipeline(_load_bundles(pattern), dims=_parse_dims(dims),
                              cluster_radius_m=cluster_radius)
    except CamlocError as exc:
        _fail(exc)
    _write_json(wire.result_to_doc(result), out)
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)


@main.command()
@click.option("--bundles", "pattern", required=True, help="Glob of bundle JSON files.")
@click.option("--refs", "refs_path", default=None,
              help="JSON file with pixel-to-GPS references.")
@click.option("--intersection", "intersection_path", default=None,
              help="Map extract JSON with intersection corner_geos.")
@click.option("--landmark", "landmark_path", default=None,
              help="Map extract JSON with the landmark footprint and geo tag.")
@click.option("--dims", default=None, help="Car dimensions L,W,H in meters.")
@click.option("--cluster-radius", default=DEFAULT_CLUSTER_RADIUS_M, type=float,
              show_default=True)
@click.option("--out", default=None, help="Output JSON path (default stdout).")
def absolute(pattern: str, refs_path: str | None, intersection_path: str | None,
             landmark_path: str | None, dims: str | None, cluster_radius: float,
             out: str | None) -> None:
    """Estimate absolute (geodetic) camera position candidates.

    References come from --refs, or a map extract via --intersection /
    --landmark (annotated pixels are taken from the bundles' own context
    blocks), or from the context embedded in the bundles.
    """
    bundles = None
    try:
        bundles = _load_bundles(pattern)
        refs = None
        intersection = None
        landmark = None
        street_bearing = None
        if refs_path:
            with open(refs_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            refs = wire.refs_from_doc(doc.get("refs", doc if isinstance(doc, list) else []))
            if isinstance(doc, dict):
                street_bearing = doc.get("street_bearing_deg")
        elif intersection_path:
            with open(intersection_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            pixels = None
            for b in bundles:
                if b.intersection is not None:
                    pixels = b.intersection.corner_pixels
                    break
            if pixels is None:
                raise SchemaViolation("intersection.corner_pixels",
                                      "no bundle carries intersection corner pixels")
            intersection = IntersectionContext(
                corner_geos=tuple(wire.geo_from_doc(g, f"corner_geos[{i}]")
                                  for i, g in enumerate(doc["corner_geos"])),
                corner_pixels=pixels,
            )
        elif landmark_path:
            with open(landmark_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            pixels = None
            mode = doc.get("mode")
            for b in bundles:
                if b.landmark is not None:
                    pixels = b.landmark.annotated_pixels
                    mode = mode or b.landmark.mode
                    break
            if pixels is None:
                raise SchemaViolation("landmark.annotated_pixels",
                                      "no bundle carries landmark pixel annotations")
            landmark = LandmarkContext(
                geo_tag=wire.geo_from_doc(doc["geo_tag"], "geo_tag"),
                footprint=tuple(wire.geo_from_doc(g, f"footprint[{i}]")
                                for i, g in enumerate(doc["footprint"])),
                mode=mode or "face_center",
                annotated_pixels=pixels,
                street_bearing_deg=doc.get("street_bearing_deg"),
            )
        else:
            first = bundles[0]
            refs, intersection, landmark = first.refs, first.intersection, first.landmark
            if not (refs or intersection or landmark):
                raise SchemaViolation(
                    "refs", "supply --refs, --intersection, or --landmark, or embed "
                            "context in the bundles")
        result = run_pipeline(bundles, dims=_parse_dims(dims), refs=refs,
                              intersection=intersection, landmark=landmark,
                              street_bearing_deg=street_bearing,
                              cluster_radius_m=cluster_radius)
    except CamlocError as exc:
        _fail(exc)
    _write_json(wire.result_to_doc(result), out)
    for w in result.warnings:
        click.echo(f"warning: {w}", err=True)


@main.group()
def sensors() -> None:
    """Virtual sensors over a calibrated result."""


def _load_calibration(result_path: str):
    with open(result_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return wire.intrinsics_from_doc(doc.get("intrinsics"), "intrinsics"), \
        wire.pose_from_doc(doc)


@sensors.command()
@click.option("--result", "result_path", required=True, help="relative/absolute output JSON.")
@click.option("--points", "points_path", required=True,
              help='JSON {"points": [[u,v],[u,v]]}.')
def scale(result_path: str, points_path: str) -> None:
    """Length in meters between two ground-plane pixels."""
    try:
        k, pose = _load_calibration(result_path)
        with open(points_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        points = doc.get("points")
        if not (isinstance(points, list) and len(points) == 2):
            raise SchemaViolation("points", "expected [p1, p2]")
        value = virtual_scale(k, pose,
                              wire.pixel_from_doc(points[0], "points[0]"),
                              wire.pixel_from_doc(points[1], "points[1]"))
    except CamlocError as exc:
        _fail(exc)
    _write_json({"value_m": value}, None)


@sensors.command()
@click.option("--result", "result_path", required=True)
@click.option("--points", "points_path", required=True,
              help='JSON {"base": [u,v], "top": [u,v]}.')
def height(result_path: str, points_path: str) -> None:
    """Building height in meters from base and roof pixels."""
    try:
        k, pose = _load_calibration(result_path)
        with open(points_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        value = virtual_clinometer(k, pose,
                                   wire.pixel_from_doc(doc.get("base"), "base"),
                                   wire.pixel_from_doc(doc.get("top"), "top"))
    except CamlocError as exc:
        _fail(exc)
    _write_json({"value_m": value}, None)


@sensors.command()
@click.option("--result", "result_path", required=True)
@click.option("--points", "points_path", required=True,
              help='JSON {"track": {"fps": n, "samples": [[[u,v],frame],...]}}.')
def speed(result_path: str, points_path: str) -> None:
    """Vehicle speed in km/h from a pixel track."""
    try:
        k, pose = _load_calibration(result_path)
        with open(points_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        value = virtual_radar(k, pose, wire.track_from_doc(doc.get("track")))
    except CamlocError as exc:
        _fail(exc)
    _write_json({"value_kmh": value}, None)


@main.command()
@click.option("--config", "config_path", required=True, help="Scenario config JSON.")
@click.option("--out", default=None, help="Report JSON path (default stdout).")
def synth(config_path: str, out: str | None) -> None:
    """Run a synthetic sweep and emit the error report."""
    try:
        with open(config_path, "r", encoding="utf-8") as fh:
            config_doc = json.load(fh)
        report_doc = run_config(config_doc)
    except CamlocError as exc:
        _fail(exc)
    _write_json(report_doc, out)
    for sweep_doc in report_doc["sweeps"]:
        rep = sweep_doc["report"]
        report = ErrorReport(
            position_errors_m=tuple(rep["position_errors_m"]),
            height_errors_m=tuple(rep["height_errors_m"]),
            absolute_errors_m=tuple(rep["absolute_errors_m"]),
            position_percentiles={int(k): v for k, v in rep["position_percentiles"].items()},
            height_percentiles={int(k): v for k, v in rep["height_percentiles"].items()},
            absolute_percentiles={int(k): v for k, v in rep["absolute_percentiles"].items()},
        )
        click.echo(f"sigma_px = {sweep_doc['sigma_px']}", err=True)
        click.echo(report.to_table(), err=True)


@main.command()
@click.option("--port", default=8000, type=int, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(port: int, host: str) -> None:
    """Run the stateless HTTP service for the annotation UI."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
