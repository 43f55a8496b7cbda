"""Flat-earth geodesy: offsets, bearings, circles, and reference frames.

One degree of latitude is 111111 m; bearings are clockwise from true
north, so offsetting (0, 0) by 111111 m at bearing 0 gives exactly
(1, 0) degrees.  The circle intersection with d = 10, d1 = d2 = sqrt(50)
lands at (5, +/-5) by symmetry.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camloc.errors import (
    AmbiguousOrdering,
    NoIntersection,
    PolarSingularity,
    RangeExceeded,
    Singular,
)
from camloc.geodesy import (
    BRANCH_LABELS,
    GeoCoordinate,
    PixelGeoRef,
    absolute_from_one_ref,
    absolute_from_two_refs,
    bearing_candidates,
    circle_intersection,
    geo_distance_m,
    normalize_bearing,
    offset_geo,
    solve_ref_frame_transform,
)
from camloc.geometry import PixelPoint, WorldPoint, camera_position_world
from camloc.sensors import pixel_to_ground
from camloc.synthetic import render_bundles


class TestOffsetGeo:
    def test_one_degree_north(self):
        g = offset_geo(GeoCoordinate(0, 0), 111111.0, 0.0, max_range_m=math.inf)
        assert (g.lat, g.lon) == (1.0, 0.0)

    def test_one_degree_east(self):
        g = offset_geo(GeoCoordinate(0, 0), 111111.0, 90.0, max_range_m=math.inf)
        assert g.lon == 1.0
        assert abs(g.lat) < 1e-12  # cos(90 deg) rounds to ~6e-17, not zero

    def test_near_inverse(self):
        # The lon leg is asymmetric through cos(lat of the endpoint); the
        # measured worst case over this regime is 3.1e-6 deg (second-order
        # in d * tan(lat)), so the frozen bound carries a small margin.
        rng = np.random.default_rng(5)
        for _ in range(300):
            ref = GeoCoordinate(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170)))
            d = float(rng.uniform(1, 1500))
            alpha = float(rng.uniform(-180, 180))
            out = offset_geo(ref, d, alpha)
            back = offset_geo(out, d, alpha + 180.0)
            assert abs(back.lat - ref.lat) < 1e-9
            assert abs(back.lon - ref.lon) < 5e-6

    def test_range_guard(self):
        with pytest.raises(RangeExceeded):
            offset_geo(GeoCoordinate(0, 0), 2000.0, 0.0)

    def test_polar_guard(self):
        with pytest.raises(PolarSingularity):
            offset_geo(GeoCoordinate(89.5, 0), 100.0, 0.0)

    def test_additive_along_fixed_bearing(self):
        # Two-step offsets evaluate cos(lat) at the intermediate point, so
        # additivity holds only to second order: measured worst case over
        # 2 km at |lat| <= 60 is 1.9e-6 deg, frozen here with margin.
        rng = np.random.default_rng(7)
        for _ in range(300):
            ref = GeoCoordinate(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170)))
            alpha = float(rng.uniform(-180, 180))
            d1, d2 = float(rng.uniform(10, 990)), float(rng.uniform(10, 990))
            two_step = offset_geo(offset_geo(ref, d1, alpha), d2, alpha)
            one_step = offset_geo(ref, d1 + d2, alpha)
            assert abs(two_step.lat - one_step.lat) < 3e-6
            assert abs(two_step.lon - one_step.lon) < 3e-6


class TestBearingCandidates:
    def test_zero_zero(self):
        assert bearing_candidates(0, 0).alphas == (90.0, 90.0, -90.0, -90.0)

    def test_substitution(self):
        assert bearing_candidates(45, 30).alphas == (165.0, 105.0, -15.0, -75.0)

    @given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
    @settings(max_examples=200, deadline=None)
    def test_outputs_normalized(self, theta, phi):
        for alpha in bearing_candidates(theta, phi).alphas:
            assert -180.0 < alpha <= 180.0

    def test_branch_labels_cover_all_cases(self):
        assert bearing_candidates(10, 20).branches == BRANCH_LABELS
        assert len(set(BRANCH_LABELS)) == 4


class TestAbsoluteFromOneRef:
    def test_symmetric_pairs_when_phi_zero(self):
        candidates = absolute_from_one_ref(WorldPoint(0.0, 25.0, 6.0),
                                           GeoCoordinate(10.0, 20.0), 0.0)
        assert len(candidates) == 4
        assert candidates[0].geo == candidates[1].geo  # +90+0 == +90-0
        assert candidates[2].geo == candidates[3].geo
        assert candidates[0].geo != candidates[2].geo
        assert all(c.height_m == 6.0 for c in candidates)

    def test_zero_distance_collapses_to_ref(self):
        ref = GeoCoordinate(34.0, -118.0)
        for c in absolute_from_one_ref(WorldPoint(0.0, 0.0, 4.0), ref, 77.0):
            assert c.geo == ref

    def test_oracle_scene_contains_truth(self, scene_batch):
        for scene in scene_batch:
            bundle = render_bundles(scene, 1, 0.0, include_refs=True)[0]
            ref = bundle.refs[0]
            cam = camera_position_world(scene.pose)
            g = pixel_to_ground(scene.intrinsics, scene.pose, ref.pixel)
            rel = WorldPoint(cam.x - g.x, cam.y - g.y, cam.z - g.z)
            candidates = absolute_from_one_ref(rel, ref.geo, scene.street_bearing_deg)
            best = min(geo_distance_m(c.geo, scene.camera_geo) for c in candidates)
            assert best < 0.111  # 1e-6 degrees in meters-equivalent


class TestCircleIntersection:
    def test_symmetric_configuration(self):
        d1 = math.sqrt(50)
        (x1, y1), (x2, y2) = circle_intersection(10.0, d1, d1)
        assert x1 == 5.0 and x2 == 5.0
        # sqrt(50)**2 is one ulp off 50, so y carries the same rounding.
        assert abs(y1 - 5.0) < 1e-12 and abs(y2 + 5.0) < 1e-12

    def test_degenerate_second_circle(self):
        (p1, p2) = circle_intersection(10.0, 10.0, 0.0)
        assert p1 == (10.0, 0.0)
        assert p2[0] == 10.0 and p2[1] == 0.0

    def test_residuals_on_random_feasible_inputs(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            d = float(rng.uniform(1, 100))
            p = np.array([rng.uniform(-100, 100), rng.uniform(-100, 100)])
            d1 = float(np.linalg.norm(p))
            d2 = float(np.linalg.norm(p - [d, 0.0]))
            if d1 < 1e-6 or d2 < 1e-6:
                continue
            for x, y in circle_intersection(d, d1, d2):
                assert abs(math.hypot(x, y) - d1) < 1e-9 * max(1, d1)
                assert abs(math.hypot(x - d, y) - d2) < 1e-9 * max(1, d2)

    def test_mirror_symmetry_exact(self):
        (x1, y1), (x2, y2) = circle_intersection(7.0, 5.0, 4.0)
        assert x1 == x2 and y1 == -y2

    def test_infeasible_radii(self):
        with pytest.raises(NoIntersection):
            circle_intersection(10.0, 2.0, 3.0)
        with pytest.raises(NoIntersection):
            circle_intersection(1.0, 10.0, 2.0)


class TestRefFrameTransform:
    def test_forced_by_linear_system(self):
        t = solve_ref_frame_transform(GeoCoordinate(0, 0), GeoCoordinate(0.001, 0), 111.111)
        assert abs(t.p - 9.000009000009e-06) < 1e-15
        assert t.q == 0.0 and t.r == 0.0 and t.s == 0.0

    def test_interpolation_property(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            ref1 = GeoCoordinate(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170)))
            ref2 = GeoCoordinate(ref1.lat + float(rng.uniform(-9e-4, 9e-4)),
                                 ref1.lon + float(rng.uniform(-9e-4, 9e-4)))
            d = geo_distance_m(ref1, ref2)
            if d < 1.0:
                continue
            t = solve_ref_frame_transform(ref1, ref2, d)
            at0 = t.apply(0.0, 0.0)
            atd = t.apply(d, 0.0)
            assert at0 == ref1
            assert abs(atd.lat - ref2.lat) < 1e-12
            assert abs(atd.lon - ref2.lon) < 1e-12

    def test_orthogonal_point_sign(self):
        t = solve_ref_frame_transform(GeoCoordinate(0, 0), GeoCoordinate(0.001, 0), 111.111)
        mapped = t.apply(0.0, 111.111)
        assert abs(mapped.lat - 0.0) < 1e-12
        assert abs(mapped.lon - (-0.001)) < 1e-12

    def test_singular_separation(self):
        with pytest.raises(Singular):
            solve_ref_frame_transform(GeoCoordinate(0, 0), GeoCoordinate(0, 0), 0.0)


class TestAbsoluteFromTwoRefs:
    def _refs_and_rels(self, scene):
        bundle = render_bundles(scene, 1, 0.0, include_refs=True)[0]
        cam = camera_position_world(scene.pose)
        rels = []
        for ref in bundle.refs:
            g = pixel_to_ground(scene.intrinsics, scene.pose, ref.pixel)
            rels.append(WorldPoint(cam.x - g.x, cam.y - g.y, cam.z - g.z))
        return bundle.refs, rels

    def test_oracle_recovery(self, scene_batch):
        for scene in scene_batch:
            refs, rels = self._refs_and_rels(scene)
            c = absolute_from_two_refs(refs[0], refs[1], rels[0], rels[1])
            assert geo_distance_m(c.geo, scene.camera_geo) < 0.111  # 1e-6 deg
            assert abs(c.height_m - scene.camera_height_m) < 1e-6

    def test_swap_symmetry(self, scene_batch):
        for scene in scene_batch:
            refs, rels = self._refs_and_rels(scene)
            a = absolute_from_two_refs(refs[0], refs[1], rels[0], rels[1])
            b = absolute_from_two_refs(refs[1], refs[0], rels[1], rels[0])
            assert abs(a.geo.lat - b.geo.lat) < 1e-9
            assert abs(a.geo.lon - b.geo.lon) < 1e-9

    def test_ambiguous_ordering(self):
        ref1 = PixelGeoRef(PixelPoint(100.0, 200.0), GeoCoordinate(0, 0))
        ref2 = PixelGeoRef(PixelPoint(100.5, 300.0), GeoCoordinate(0.0005, 0))
        with pytest.raises(AmbiguousOrdering):
            absolute_from_two_refs(ref1, ref2,
                                   WorldPoint(10, 0, 5), WorldPoint(10, 40, 5))


class TestNormalizeBearing:
    @given(st.floats(-1e6, 1e6))
    @settings(max_examples=300, deadline=None)
    def test_range(self, deg):
        r = normalize_bearing(deg)
        assert -180.0 < r <= 180.0

    def test_boundary(self):
        assert normalize_bearing(-180.0) == 180.0
        assert normalize_bearing(180.0) == 180.0
        assert normalize_bearing(540.0) == 180.0
