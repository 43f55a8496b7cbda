"""End-to-end pipeline orchestration over annotation bundles."""

import pytest

from camloc.annotations import AnnotationBundle
from camloc.errors import AllBundlesInvalid, EmptyInput, InvariantViolation
from camloc.extrinsics import CarAxesAnnotation
from camloc.geodesy import geo_distance_m
from camloc.geometry import PixelPoint
from camloc.pipeline import run_pipeline
from camloc.synthetic import generate_scene, render_bundles


class TestRunPipeline:
    def test_noise_free_two_refs(self, scene_batch):
        for scene in scene_batch[:8]:
            bundles = render_bundles(scene, 3, 0.0, include_refs=True)
            result = run_pipeline(bundles, dims=scene.car_dims, refs=bundles[0].refs)
            assert len(result.absolute_candidates) == 1
            err = geo_distance_m(result.absolute_candidates[0].geo, scene.camera_geo)
            assert err < 0.111  # 1e-6 degrees in meters-equivalent
            assert result.camera_position.distance_to(scene.camera_position()) < 1e-6

    def test_noise_free_one_ref_four_candidates(self, scene_batch):
        for scene in scene_batch[:8]:
            bundles = render_bundles(scene, 2, 0.0, include_refs=True)
            result = run_pipeline(bundles, dims=scene.car_dims,
                                  refs=bundles[0].refs[:1],
                                  street_bearing_deg=scene.street_bearing_deg)
            assert len(result.absolute_candidates) == 4
            best = min(geo_distance_m(c.geo, scene.camera_geo)
                       for c in result.absolute_candidates)
            assert best < 0.111

    def test_one_ref_requires_street_bearing(self, scene0):
        bundles = render_bundles(scene0, 1, 0.0, include_refs=True)
        with pytest.raises(InvariantViolation):
            run_pipeline(bundles, dims=scene0.car_dims, refs=bundles[0].refs[:1])

    def test_spam_bundle_skipped_without_changing_result(self, scene0):
        bundles = render_bundles(scene0, 9, 1.0, seed=21)
        spam_source = bundles[0]
        spam = AnnotationBundle(
            image_id=spam_source.image_id,
            image_size=spam_source.image_size,
            annotator_id="spammer-00",
            car_axes=CarAxesAnnotation(
                origin=PixelPoint(100, 100), x_end=PixelPoint(220, 100),
                y_end=PixelPoint(340, 100), z_end=PixelPoint(460, 100)),
            parallel_sets=spam_source.parallel_sets,
        )
        clean = run_pipeline(bundles, dims=scene0.car_dims)
        with_spam = run_pipeline(list(bundles) + [spam], dims=scene0.car_dims)
        assert with_spam.camera_position == clean.camera_position
        assert len(with_spam.warnings) == len(clean.warnings) + 1
        assert "spammer-00" in with_spam.warnings[-1]

    def test_all_bundles_invalid(self, scene0):
        source = render_bundles(scene0, 1, 0.0)[0]
        spam = AnnotationBundle(
            image_id=source.image_id,
            image_size=source.image_size,
            annotator_id="spammer-01",
            car_axes=CarAxesAnnotation(
                origin=PixelPoint(100, 100), x_end=PixelPoint(220, 100),
                y_end=PixelPoint(340, 100), z_end=PixelPoint(460, 100)),
            parallel_sets=source.parallel_sets,
        )
        with pytest.raises(AllBundlesInvalid):
            run_pipeline([spam], dims=scene0.car_dims)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            run_pipeline([])

    def test_quality_fields_present(self, scene0):
        bundles = render_bundles(scene0, 3, 0.5, seed=2)
        result = run_pipeline(bundles, dims=scene0.car_dims)
        assert result.quality["candidate_count"] == 6
        assert result.quality["candidate_spread_m"] >= 0.0
        assert "intrinsics_residual_max" in result.quality

    def test_intersection_context_path(self):
        from camloc.synthetic import (SceneRanges, add_intersection,
                                      render_intersection_context)

        scene = None
        for seed in range(1, 30):
            try:
                scene = add_intersection(
                    generate_scene(seed, SceneRanges(camera_distance_m=(5.0, 32.0))),
                    visible_count=2, seed=1)
                break
            except Exception:
                continue
        assert scene is not None
        ctx = render_intersection_context(scene, 0.0)
        bundles = render_bundles(scene, 2, 0.0)
        result = run_pipeline(bundles, dims=scene.car_dims, intersection=ctx)
        assert 1 <= len(result.absolute_candidates) <= 2
        best = min(geo_distance_m(c.geo, scene.camera_geo)
                   for c in result.absolute_candidates)
        assert best < 0.111

    def test_landmark_context_path(self, scene0):
        from camloc.synthetic import add_landmark, render_landmark_context

        scene = add_landmark(scene0, size_m=(16.0, 10.0), seed=3)
        ctx = render_landmark_context(scene, "corner", 0.0)
        bundles = render_bundles(scene, 2, 0.0)
        result = run_pipeline(bundles, dims=scene.car_dims, landmark=ctx)
        assert result.absolute_candidates
        best = min(geo_distance_m(c.geo, scene.camera_geo)
                   for c in result.absolute_candidates)
        assert best < 0.111
