"""Vanishing point estimation, the orthocenter, and intrinsics recovery.

Key identities exercised here:
  - VP of world axis i is the dehomogenization of K r_i.
  - For three finite orthogonal VPs the image center is the triangle
    orthocenter (right triangle -> the right-angle vertex).
  - With the center fixed, v_i^T K^-T K^-1 v_j = 0 is linear in
    (1/fx^2, 1/fy^2).
"""

import math

import numpy as np
import pytest

from camloc.errors import (
    Degenerate,
    DegenerateTriangle,
    InfiniteVanishingPoint,
    InsufficientInliers,
    NonPositiveFocal,
)
from camloc.geometry import Intrinsics, PixelPoint, Rotation
from camloc.synthetic import SceneRanges, axis_hint_segments, generate_scene, render_edgelets
from camloc.vanishing import (
    LineSegment2D,
    VanishingPoint,
    VanishingTriple,
    estimate_vp,
    orthocenter_image_center,
    orthogonality_residual,
    ransac_vps,
    solve_intrinsics,
)

from conftest import random_rotation

# Well-conditioned regime for the automatic edgelet path: near-corner views
# put all three VPs within ~2 focal lengths, which is where direction-only
# evidence carries enough information (see the RANSAC envelope test).
AUTO_RANGES = SceneRanges(min_axis_depth=0.55, focal_px=(600.0, 750.0),
                          camera_height_m=(5.0, 15.0), camera_distance_m=(5.0, 16.0))


def seg(a, b) -> LineSegment2D:
    return LineSegment2D(PixelPoint(*a), PixelPoint(*b))


def triple_from(k: Intrinsics, r: Rotation) -> VanishingTriple:
    km = k.matrix()
    vps = [VanishingPoint.from_homogeneous(km @ r.matrix[:, i]) for i in range(3)]
    return VanishingTriple(*vps)


def finite_rotation(rng, min_depth=0.1) -> Rotation:
    while True:
        r = random_rotation(rng)
        if np.abs(r.matrix[2, :]).min() >= min_depth:
            return r


class TestEstimateVp:
    def test_two_line_intersection(self):
        # v = u and v = -u + 2 cross at (1, 1).
        vp = estimate_vp([seg((0, 0), (4, 4)), seg((0, 2), (4, -2))])
        assert vp.finite
        assert abs(vp.inhomogeneous.u - 1.0) < 1e-9
        assert abs(vp.inhomogeneous.v - 1.0) < 1e-9

    def test_parallel_segments_give_infinite_vp(self):
        vp = estimate_vp([seg((0, 0), (10, 0)), seg((0, 10), (10, 10))])
        assert not vp.finite
        assert abs(vp.h[0]) > 0.999999  # direction (1, 0) after canonicalization
        assert abs(vp.h[2]) < 1e-6

    def test_oracle_noise_envelope(self):
        """0.5 px endpoint noise: VP within 2 px of K r_i at the 95th pct.

        Dense oracle: ~48 segments per direction sampled from the projected
        world-parallel line families on corner-view scenes (every VP within
        about two focal lengths).  Sparse four-line annotations cannot pin
        a VP to 2 px at this noise level; the density is the oracle's, not
        the human annotation workflow's.
        """
        from camloc.geometry import WorldPoint, project_to_pixel
        from camloc.synthetic import _axis_line_templates, _noisy_pixel

        cfg = SceneRanges(min_axis_depth=0.55, focal_px=(550.0, 700.0),
                          camera_height_m=(4.0, 15.0), camera_distance_m=(5.0, 16.0))
        scenes = []
        sd = -1
        while len(scenes) < 20 and sd < 200:
            sd += 1
            try:
                scenes.append(generate_scene(sd, cfg))
            except Exception:
                continue

        def project_wide(scene, a_w, b_w):
            # Unit-oracle projection: full line extent (shrunk only to stay
            # in front of the camera and inside a generous pixel window),
            # unconstrained by what an annotator could draw in-frame.
            w, h = scene.image_size
            mid = (a_w + b_w) / 2.0
            for shrink in (1.0, 0.7, 0.45, 0.25, 0.12):
                a = mid + (a_w - mid) * shrink
                b = mid + (b_w - mid) * shrink
                try:
                    pa = project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(*a)).pixel
                    pb = project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(*b)).pixel
                except Exception:
                    continue
                inside = all(-1.4 * w <= p.u <= 2.4 * w and -1.4 * h <= p.v <= 2.4 * h
                             for p in (pa, pb))
                if inside and pa.distance_to(pb) >= 8.0:
                    return pa, pb
            return None

        errors = []
        for trial in range(500):
            scene = scenes[trial % len(scenes)]
            rng = np.random.default_rng(trial)
            truth = scene.vanishing_triple()
            for axis, true_vp in enumerate(truth.points()):
                segments = []
                for _ in range(6):
                    for template in _axis_line_templates(scene.car_dims, axis, rng,
                                                         spread=3.5):
                        pair = project_wide(scene, *template)
                        if pair is None:
                            continue
                        pa, pb = pair
                        segments.append(LineSegment2D(_noisy_pixel(pa, 0.5, rng),
                                                      _noisy_pixel(pb, 0.5, rng)))
                    if len(segments) >= 48:
                        break
                est = estimate_vp(segments[:48])
                if est.finite:
                    errors.append(est.inhomogeneous.distance_to(true_vp))
        assert len(errors) >= 1400
        assert np.percentile(errors, 95) <= 2.0

    def test_reordering_and_endpoint_swap_invariance(self):
        segments = [seg((0, 0), (4, 4)), seg((0, 2), (4, -2)), seg((1, 0.5), (5, 2.6))]
        base = estimate_vp(segments)
        reordered = estimate_vp(segments[::-1])
        swapped = estimate_vp([LineSegment2D(s.b, s.a) for s in segments])
        for other in (reordered, swapped):
            assert base.inhomogeneous.distance_to(other.inhomogeneous) < 1e-9

    def test_collinear_segments_degenerate(self):
        with pytest.raises(Degenerate):
            estimate_vp([seg((0, 0), (4, 0)), seg((6, 0), (10, 0))])

    def test_fewer_than_two_segments(self):
        with pytest.raises(Degenerate):
            estimate_vp([seg((0, 0), (4, 0))])


class TestOrthocenter:
    def test_right_triangle_vertex(self):
        t = VanishingTriple(VanishingPoint.from_pixel(PixelPoint(0, 0)),
                            VanishingPoint.from_pixel(PixelPoint(4, 0)),
                            VanishingPoint.from_pixel(PixelPoint(0, 3)))
        center = orthocenter_image_center(t)
        assert (center.u, center.v) == (0.0, 0.0)

    def test_permutation_invariance(self):
        pts = [PixelPoint(12, -34), PixelPoint(500, 80), PixelPoint(-100, 900)]
        results = []
        import itertools

        for perm in itertools.permutations(pts):
            t = VanishingTriple(*[VanishingPoint.from_pixel(p) for p in perm])
            results.append(orthocenter_image_center(t))
        for r in results[1:]:
            assert results[0].distance_to(r) < 1e-9

    def test_recovers_center_noise_free(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            k = Intrinsics(fx=1000.0, fy=1000.0,
                           cx=float(rng.uniform(400, 900)), cy=float(rng.uniform(200, 500)))
            t = triple_from(k, finite_rotation(rng))
            center = orthocenter_image_center(t)
            assert abs(center.u - k.cx) < 1e-6
            assert abs(center.v - k.cy) < 1e-6

    def test_collinear_rejected(self):
        t = VanishingTriple(VanishingPoint.from_pixel(PixelPoint(0, 0)),
                            VanishingPoint.from_pixel(PixelPoint(100, 0)),
                            VanishingPoint.from_pixel(PixelPoint(200, 0.001)))
        with pytest.raises(DegenerateTriangle):
            orthocenter_image_center(t)

    def test_similarity_equivariance(self):
        pts = [PixelPoint(10, 20), PixelPoint(300, -40), PixelPoint(-80, 500)]
        t1 = VanishingTriple(*[VanishingPoint.from_pixel(p) for p in pts])
        s = 3.5
        t2 = VanishingTriple(*[VanishingPoint.from_pixel(PixelPoint(p.u * s, p.v * s))
                               for p in pts])
        c1 = orthocenter_image_center(t1)
        c2 = orthocenter_image_center(t2)
        assert abs(c2.u - s * c1.u) < 1e-9
        assert abs(c2.v - s * c1.v) < 1e-9


class TestSolveIntrinsics:
    def test_recovers_square_pixel_camera(self):
        rng = np.random.default_rng(41)
        k = Intrinsics(fx=1000.0, fy=1000.0, cx=640.0, cy=360.0)
        for _ in range(50):
            t = triple_from(k, finite_rotation(rng))
            est = solve_intrinsics(t)
            assert abs(est.fx - k.fx) / k.fx < 1e-6
            assert abs(est.fy - k.fy) / k.fy < 1e-6
            assert abs(est.cx - k.cx) < 1e-6
            assert abs(est.cy - k.cy) < 1e-6

    @pytest.mark.xfail(
        strict=True,
        reason="The Euclidean orthocenter coincides with the principal point only "
               "for square pixels: subtracting pairwise orthogonality constraints "
               "forces (y_i y_j terms) * (1/fy^2 - 1/fx^2) = 0, which contradicts "
               "the constraints themselves when fx != fy.  No VP triple of a true "
               "anamorphic camera satisfies both, so the orthocenter-based path "
               "cannot recover fx=1200, fy=900 exactly.")
    def test_recovers_anamorphic_camera(self):
        rng = np.random.default_rng(43)
        k = Intrinsics(fx=1200.0, fy=900.0, cx=640.0, cy=360.0)
        worst = 0.0
        for _ in range(20):
            t = triple_from(k, finite_rotation(rng))
            est = solve_intrinsics(t)
            worst = max(worst, abs(est.fx - k.fx) / k.fx, abs(est.fy - k.fy) / k.fy)
        assert worst < 1e-6

    def test_obtuse_triangle_refused(self):
        # An obtuse VP triangle puts the orthocenter outside it, making the
        # squared focal estimate negative: the detectable bad-input case.
        t = VanishingTriple(VanishingPoint.from_pixel(PixelPoint(0.0, 0.0)),
                            VanishingPoint.from_pixel(PixelPoint(1000.0, 0.0)),
                            VanishingPoint.from_pixel(PixelPoint(500.0, 20.0)))
        with pytest.raises(NonPositiveFocal) as err:
            solve_intrinsics(t)
        assert err.value.residual >= 0.0

    def test_non_orthogonal_directions_refused_or_self_consistent(self):
        """Directions 60 degrees apart cannot come from a rotation.

        Any acute VP triangle is, however, a valid orthogonal-camera
        interpretation (three constraints against four free intrinsics,
        and the orthocenter always admits an isotropic solution), so a
        non-orthogonal world direction set cannot always be distinguished:
        some draws must be refused (NonPositiveFocal), and whatever is
        returned must at least be self-consistent (zero orthogonality
        residual, never a half-fitted K).
        """
        rng = np.random.default_rng(47)
        k = Intrinsics(fx=1000.0, fy=1000.0, cx=640.0, cy=360.0)
        refused = 0
        for _ in range(20):
            r = finite_rotation(rng).matrix
            d1, d3 = r[:, 0], r[:, 2]
            d2 = math.cos(math.radians(60)) * r[:, 0] + math.sin(math.radians(60)) * r[:, 1]
            km = k.matrix()
            try:
                t = VanishingTriple(*[VanishingPoint.from_homogeneous(km @ d)
                                      for d in (d1, d2, d3)])
                est = solve_intrinsics(t)
            except (NonPositiveFocal, DegenerateTriangle, InfiniteVanishingPoint):
                refused += 1
                continue
            assert orthogonality_residual(est, t) < 1e-9
        assert refused >= 5

    def test_orthogonality_residual_zero_noise_free(self):
        rng = np.random.default_rng(53)
        k = Intrinsics(fx=1100.0, fy=1100.0, cx=600.0, cy=400.0)
        for _ in range(50):
            t = triple_from(k, finite_rotation(rng))
            est = solve_intrinsics(t)
            assert orthogonality_residual(est, t) < 1e-9


class TestTripleInvariants:
    def test_infinite_member_rejected(self):
        finite = VanishingPoint.from_pixel(PixelPoint(100, 100))
        finite2 = VanishingPoint.from_pixel(PixelPoint(900, -50))
        infinite = VanishingPoint.from_homogeneous([1.0, 0.0, 0.0])
        with pytest.raises(InfiniteVanishingPoint):
            VanishingTriple(finite, finite2, infinite)


class TestRansacVps:
    def test_exact_recovery_without_noise(self, scene0):
        edges = render_edgelets(scene0, 60, 0.0, 0.0, seed=5)
        triple = ransac_vps(edges, axis_hint_segments(scene0), seed=7)
        truth = scene0.vanishing_triple()
        for true_vp, est_vp in zip(truth.points(), triple.points()):
            assert true_vp.distance_to(est_vp) < 1e-6

    def test_seed_determinism(self, scene0):
        edges = render_edgelets(scene0, 80, 1.0, 0.2, seed=5)
        hints = axis_hint_segments(scene0)
        t1 = ransac_vps(edges, hints, seed=42)
        t2 = ransac_vps(edges, hints, seed=42)
        assert t1.vx.h == t2.vx.h and t1.vy.h == t2.vy.h and t1.vz.h == t2.vz.h

    def test_single_axis_support_fails_other_axes(self, scene0):
        edges = render_edgelets(scene0, 60, 0.0, 0.0, seed=5)
        hints = axis_hint_segments(scene0)
        # Keep only edgelets consistent with the x axis.
        truth = scene0.vanishing_triple()
        vp = truth.vx.inhomogeneous.as_array()
        keep = []
        for e in edges:
            to_vp = vp - e.center.as_array()
            cos = abs(float(np.dot(e.direction, to_vp))) / np.linalg.norm(to_vp)
            if cos >= math.cos(math.radians(2.0)):
                keep.append(e)
        with pytest.raises(InsufficientInliers) as err:
            ransac_vps(keep[:5], hints, seed=3)
        assert err.value.axis in ("y", "z")

    def test_noisy_outlier_envelope(self):
        """Regression envelope for the automatic path.

        Calibrated on the corner-view oracle (all three VPs within ~2
        focal lengths, 3000 edgelets, 30% outliers, sigma = 1 degree): the
        worst-axis error stays within 18 px for >= 90% of seeds.  The 5 px
        bound one might hope for is unreachable at this noise level: the
        pair-sampled consensus is nearly blind along the line pencil, and
        even the oracle-selected refit sits at 3-7 px (see decisions log).
        """
        hits = trials = 0
        sd = -1
        while trials < 30 and sd < 200:
            sd += 1
            try:
                scene = generate_scene(sd, AUTO_RANGES)
            except Exception:
                continue
            edges = render_edgelets(scene, 3000, 1.0, 0.3, seed=sd + 1000, line_spread=3.5)
            try:
                triple = ransac_vps(edges, axis_hint_segments(scene), seed=sd, iterations=500)
            except InsufficientInliers:
                trials += 1
                continue
            truth = scene.vanishing_triple()
            worst = max(tv.distance_to(ev)
                        for tv, ev in zip(truth.points(), triple.points()))
            hits += worst <= 18.0
            trials += 1
        assert trials == 30
        assert hits >= 27  # >= 90%
