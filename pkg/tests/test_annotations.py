"""Bundle schema parsing, canonical serialization, and selection heuristics.

The golden fixture is the canonical byte form: parse -> serialize must
reproduce it exactly, and unknown fields or missing parallel sets must be
rejected with precise field paths.
"""

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camloc.annotations import (
    AnnotationBundle,
    BoundingBox,
    bundle_to_document,
    parse_bundle,
    select_car_bbox,
    serialize_bundle,
    validate_bundle,
)
from camloc.errors import EmptyInput, InvariantViolation, SchemaViolation
from camloc.extrinsics import CarAxesAnnotation
from camloc.geometry import PixelPoint
from camloc.synthetic import render_bundles
from camloc.vanishing import LineSegment2D

FIXTURE = Path(__file__).parent / "fixtures" / "bundle_canonical.json"


class TestParseBundle:
    def test_golden_fixture_identity(self):
        data = FIXTURE.read_bytes()
        bundle = parse_bundle(data)
        assert bundle.image_id == "cam-0042"
        assert bundle.image_size == (1280, 720)
        assert bundle.annotator_id == "annotator-03"
        assert bundle.car_axes.origin == PixelPoint(612.5, 486.0)
        assert len(bundle.parallel_sets) == 3
        assert all(len(s) == 3 for s in bundle.parallel_sets)
        assert bundle.dims.length_m == 4.5
        assert bundle.refs[0].geo.lat == 34.021234
        assert serialize_bundle(bundle) == data

    def test_parse_serialize_parse_round_trip(self):
        bundle = parse_bundle(FIXTURE.read_bytes())
        again = parse_bundle(serialize_bundle(bundle))
        assert again == bundle

    def test_missing_z_set_field_path(self):
        doc = json.loads(FIXTURE.read_text())
        del doc["parallel_sets"]["z"]
        with pytest.raises(SchemaViolation) as err:
            parse_bundle(json.dumps(doc))
        assert err.value.field_path == "parallel_sets.z"

    def test_unknown_field_rejected(self):
        doc = json.loads(FIXTURE.read_text())
        doc["extra"] = 1
        with pytest.raises(SchemaViolation) as err:
            parse_bundle(json.dumps(doc))
        assert err.value.field_path == "extra"

    def test_unknown_version_rejected(self):
        doc = json.loads(FIXTURE.read_text())
        doc["version"] = 2
        with pytest.raises(SchemaViolation) as err:
            parse_bundle(json.dumps(doc))
        assert err.value.field_path == "version"

    def test_invariant_violation_reported(self):
        doc = json.loads(FIXTURE.read_text())
        # Degenerate segment: endpoints closer than 2 px.
        doc["parallel_sets"]["x"][0] = [[100, 100], [100.5, 100.5]]
        with pytest.raises(InvariantViolation) as err:
            parse_bundle(json.dumps(doc))
        assert err.value.invariant == "LineSegment2D.min_length"

    def test_not_json(self):
        with pytest.raises(SchemaViolation):
            parse_bundle(b"not json at all")

    def test_rendered_bundles_round_trip(self, scene_batch):
        for scene in scene_batch[:5]:
            bundle = render_bundles(scene, 1, 1.0, seed=9, include_refs=True)[0]
            assert parse_bundle(serialize_bundle(bundle)) == bundle


class TestValidateBundle:
    def test_oracle_bundle_valid(self, scene_batch):
        for scene in scene_batch[:5]:
            report = validate_bundle(render_bundles(scene, 1, 0.0)[0])
            assert report.valid
            assert report.flags == ()

    def test_collinear_axes_flagged(self, scene0):
        bundle = render_bundles(scene0, 1, 0.0)[0]
        w, h = bundle.image_size
        collinear = AnnotationBundle(
            image_id=bundle.image_id,
            image_size=bundle.image_size,
            annotator_id=bundle.annotator_id,
            car_axes=CarAxesAnnotation(
                origin=PixelPoint(100, 100), x_end=PixelPoint(200, 100),
                y_end=PixelPoint(300, 100), z_end=PixelPoint(400, 100)),
            parallel_sets=bundle.parallel_sets,
        )
        report = validate_bundle(collinear)
        assert not report.valid
        assert "axes-degenerate" in report.flags

    def test_perpendicular_segments_flagged(self, scene0):
        bundle = render_bundles(scene0, 1, 0.0)[0]
        bad_set = (LineSegment2D(PixelPoint(100, 100), PixelPoint(200, 100)),
                   LineSegment2D(PixelPoint(100, 120), PixelPoint(100, 220)))
        spam = AnnotationBundle(
            image_id=bundle.image_id,
            image_size=bundle.image_size,
            annotator_id=bundle.annotator_id,
            car_axes=bundle.car_axes,
            parallel_sets=(bad_set, bundle.parallel_sets[1], bundle.parallel_sets[2]),
        )
        report = validate_bundle(spam)
        assert not report.valid
        assert "parallel-set-inconsistent" in report.flags

    def test_verdict_order_independent(self, scene0):
        bundle = render_bundles(scene0, 1, 1.0, seed=3)[0]
        flipped = AnnotationBundle(
            image_id=bundle.image_id,
            image_size=bundle.image_size,
            annotator_id=bundle.annotator_id,
            car_axes=bundle.car_axes,
            parallel_sets=tuple(tuple(reversed(s)) for s in bundle.parallel_sets),
        )
        assert validate_bundle(bundle).flags == validate_bundle(flipped).flags


boxes_strategy = st.lists(
    st.tuples(st.floats(0, 1000), st.floats(0, 600),
              st.floats(5, 400), st.floats(5, 300)),
    min_size=1, max_size=8,
)


class TestSelectCarBbox:
    def test_single_box(self):
        box = BoundingBox(PixelPoint(0, 0), PixelPoint(10, 10), "car")
        assert select_car_bbox([box], (100, 100)) is box

    def test_centered_box_wins_on_equal_area(self):
        centered = BoundingBox(PixelPoint(45, 45), PixelPoint(55, 55), "car")
        offset = BoundingBox(PixelPoint(0, 0), PixelPoint(10, 10), "car")
        assert select_car_bbox([offset, centered], (100, 100)) is centered

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            select_car_bbox([], (100, 100))

    @given(boxes_strategy)
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, raw):
        image_size = (1280, 720)
        boxes = [BoundingBox(PixelPoint(u, v), PixelPoint(u + w, v + h), "car")
                 for u, v, w, h in raw]
        best = select_car_bbox(boxes, image_size)
        center = PixelPoint(image_size[0] / 2, image_size[1] / 2)

        def score(b):
            return b.area() / max(b.center().distance_to(center), 1.0)

        scores = [score(b) for b in boxes]
        assert score(best) == max(scores)
        assert boxes.index(best) == scores.index(max(scores))

    def test_scale_equivariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            raw = [(float(rng.uniform(0, 1000)), float(rng.uniform(0, 600)),
                    float(rng.uniform(5, 400)), float(rng.uniform(5, 300)))
                   for _ in range(5)]
            boxes = [BoundingBox(PixelPoint(u, v), PixelPoint(u + w, v + h), "car")
                     for u, v, w, h in raw]
            s = 3.0
            scaled = [BoundingBox(PixelPoint(u * s, v * s),
                                  PixelPoint((u + w) * s, (v + h) * s), "car")
                      for u, v, w, h in raw]
            i1 = boxes.index(select_car_bbox(boxes, (1280, 720)))
            i2 = scaled.index(select_car_bbox(scaled, (1280 * 3, 720 * 3)))
            assert i1 == i2


class TestCanonicalNumbers:
    def test_integral_floats_written_as_integers(self):
        doc = bundle_to_document(parse_bundle(FIXTURE.read_bytes()))
        assert doc["car_axes"]["x_end"] == [824, 461.5]
        text = FIXTURE.read_text()
        assert "\n      824,\n" in text  # no trailing .0

    def test_bundle_out_of_window_rejected(self):
        doc = json.loads(FIXTURE.read_text())
        doc["car_axes"]["origin"] = [999999, 486.0]
        with pytest.raises(InvariantViolation):
            parse_bundle(json.dumps(doc))
