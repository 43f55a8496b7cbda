"""Ground-plane inversion and the three virtual sensors.

The ground inversion solves lambda [u, v, 1]^T = K (x r1 + y r2 + T) for
(x, y, lambda); everything else is distances over inverted points.  The
radar number 0.5 m/frame at 30 fps = 0.5 * 30 * 3.6 = 54 km/h exactly.
"""

import math

import numpy as np
import pytest

from camloc.errors import HorizonRay, InvariantViolation, VerticalInconsistent
from camloc.geometry import PixelPoint, WorldPoint, project_to_pixel
from camloc.sensors import (
    PixelTrack,
    pixel_to_ground,
    virtual_clinometer,
    virtual_radar,
    virtual_scale,
)


def ground_pixel(scene, x, y):
    return project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(x, y, 0.0)).pixel


class TestPixelToGround:
    def test_round_trip(self, scene_batch):
        rng = np.random.default_rng(3)
        for scene in scene_batch:
            for _ in range(5):
                w = WorldPoint(float(rng.uniform(-3, 12)), float(rng.uniform(-3, 10)), 0.0)
                try:
                    px = project_to_pixel(scene.intrinsics, scene.pose, w).pixel
                except Exception:
                    continue
                assert pixel_to_ground(scene.intrinsics, scene.pose, px).distance_to(w) < 1e-6

    def test_origin_annotation_self_consistency(self, scene_batch):
        for scene in scene_batch:
            px = ground_pixel(scene, 0.0, 0.0)
            g = pixel_to_ground(scene.intrinsics, scene.pose, px)
            assert g.distance_to(WorldPoint(0, 0, 0)) < 1e-6

    def test_horizon_ray(self, scene0):
        # The image of a direction parallel to the ground lies on the
        # horizon line; its back-projected ray never meets the plane.
        r = scene0.pose.rotation.matrix
        k = scene0.intrinsics.matrix()
        direction = np.array([math.cos(0.3), math.sin(0.3), 0.0])
        cam_dir = r @ direction
        assert cam_dir[2] > 0  # in front, so the pixel is well defined
        vec = k @ cam_dir
        horizon_px = PixelPoint(vec[0] / vec[2], vec[1] / vec[2])
        with pytest.raises(HorizonRay):
            pixel_to_ground(scene0.intrinsics, scene0.pose, horizon_px)


class TestVirtualScale:
    def test_coincident_pixels(self, scene0):
        p = ground_pixel(scene0, 3.0, 1.0)
        assert virtual_scale(scene0.intrinsics, scene0.pose, p, p) == 0.0

    def test_exact_length_noise_free(self, scene0):
        p1 = ground_pixel(scene0, 2.0, 1.0)
        p2 = ground_pixel(scene0, 12.0, 1.0)
        assert abs(virtual_scale(scene0.intrinsics, scene0.pose, p1, p2) - 10.0) < 1e-6

    def test_symmetry_and_triangle_inequality(self, scene0):
        k, pose = scene0.intrinsics, scene0.pose
        pts = [ground_pixel(scene0, x, y) for x, y in ((0, 0), (8, 2), (3, 6))]
        d01 = virtual_scale(k, pose, pts[0], pts[1])
        d10 = virtual_scale(k, pose, pts[1], pts[0])
        d02 = virtual_scale(k, pose, pts[0], pts[2])
        d12 = virtual_scale(k, pose, pts[1], pts[2])
        assert d01 == d10
        assert d01 <= d02 + d12 + 1e-12


class TestVirtualClinometer:
    def test_zero_height(self, scene0):
        p = ground_pixel(scene0, 6.0, 2.0)
        assert abs(virtual_clinometer(scene0.intrinsics, scene0.pose, p, p)) < 1e-9

    def test_exact_building_height(self, scene_batch):
        for scene in scene_batch[:10]:
            base_w = WorldPoint(9.0, 4.0, 0.0)
            top_w = WorldPoint(9.0, 4.0, 20.0)
            base = project_to_pixel(scene.intrinsics, scene.pose, base_w).pixel
            top = project_to_pixel(scene.intrinsics, scene.pose, top_w).pixel
            h = virtual_clinometer(scene.intrinsics, scene.pose, base, top)
            assert abs(h - 20.0) < 1e-6

    def test_off_vertical_top_rejected(self, scene0):
        base_w = WorldPoint(9.0, 4.0, 0.0)
        top_w = WorldPoint(9.0, 4.0, 15.0)
        base = project_to_pixel(scene0.intrinsics, scene0.pose, base_w).pixel
        top = project_to_pixel(scene0.intrinsics, scene0.pose, top_w).pixel
        shifted = PixelPoint(top.u + 80.0, top.v)
        with pytest.raises(VerticalInconsistent) as err:
            virtual_clinometer(scene0.intrinsics, scene0.pose, base, shifted)
        assert err.value.residual_px > 5.0


class TestVirtualRadar:
    def test_formula_arithmetic(self, scene0):
        # Ground steps of exactly 0.5 m per frame at 30 fps.
        k, pose = scene0.intrinsics, scene0.pose
        samples = []
        for i in range(6):
            px = ground_pixel(scene0, 2.0 + 0.5 * i, 3.0)
            samples.append((px, i))
        speed = virtual_radar(k, pose, PixelTrack(samples=tuple(samples), fps=30.0))
        assert abs(speed - 54.0) < 1e-6

    def test_stationary_track(self, scene0):
        px = ground_pixel(scene0, 5.0, 2.0)
        track = PixelTrack(samples=((px, 0), (px, 3), (px, 6)), fps=30.0)
        assert virtual_radar(scene0.intrinsics, scene0.pose, track) == 0.0

    def test_linear_in_displacement(self, scene0):
        k, pose = scene0.intrinsics, scene0.pose
        base = np.array([2.0, 3.0])
        step = np.array([0.4, 0.1])
        single = []
        double = []
        for i in range(5):
            p1 = base + i * step
            p2 = base + i * 2 * step
            single.append((ground_pixel(scene0, *p1), i))
            double.append((ground_pixel(scene0, *p2), i))
        s1 = virtual_radar(k, pose, PixelTrack(samples=tuple(single), fps=30.0))
        s2 = virtual_radar(k, pose, PixelTrack(samples=tuple(double), fps=30.0))
        assert abs(s2 - 2.0 * s1) < 1e-7 * s1

    def test_track_invariants(self):
        p = PixelPoint(10.0, 10.0)
        with pytest.raises(InvariantViolation):
            PixelTrack(samples=((p, 0),), fps=30.0)
        with pytest.raises(InvariantViolation):
            PixelTrack(samples=((p, 3), (p, 3)), fps=30.0)
        with pytest.raises(InvariantViolation):
            PixelTrack(samples=((p, 0), (p, 1)), fps=0.0)
