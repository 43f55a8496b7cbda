"""Vanishing point estimation and intrinsics from an orthogonal triple.

Parallel world lines project to image lines meeting at a single vanishing
point (VP).  Three mutually orthogonal directions give three VPs; when all
three are finite, the image center is the orthocenter of their triangle and
the pairwise orthogonality constraints

    v_i^T K^-T K^-1 v_j = 0        (homogeneous pixel VPs, i != j)

are linear in (1/fx^2, 1/fy^2) once the center is fixed, which is how
solve_intrinsics recovers the focal lengths.

The two-finite-plus-one-infinite configuration (one camera axis parallel to
a world axis) is detected and rejected with InfiniteVanishingPoint; no
calibration path is implemented for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    Degenerate,
    DegenerateTriangle,
    InfiniteVanishingPoint,
    InsufficientInliers,
    InvariantViolation,
    NonPositiveFocal,
)
from .geometry import Intrinsics, PixelPoint

# |h3| of the unit homogeneous vector below which a VP counts as infinite.
FINITE_VP_THRESHOLD = 1e-6

# Minimum VP triangle area (px^2) for the orthocenter to be well defined.
MIN_TRIANGLE_AREA = 1.0

# RANSAC defaults: iteration count, inlier cone around the hypothesized VP
# direction, and the acceptance cone around the axis hint.
RANSAC_ITERATIONS = 1000
RANSAC_INLIER_ANGLE_DEG = 2.0
RANSAC_HINT_ANGLE_DEG = 15.0
RANSAC_MIN_INLIERS = 4


@dataclass(frozen=True)
class LineSegment2D:
    """Annotated image segment; endpoints at least 2 px apart."""

    a: PixelPoint
    b: PixelPoint

    def __post_init__(self):
        if self.a.distance_to(self.b) < 2.0:
            raise InvariantViolation("LineSegment2D.min_length",
                                     "segment endpoints closer than 2 px")

    def direction(self) -> np.ndarray:
        d = self.b.as_array() - self.a.as_array()
        return d / np.linalg.norm(d)

    def midpoint(self) -> PixelPoint:
        return PixelPoint((self.a.u + self.b.u) / 2.0, (self.a.v + self.b.v) / 2.0)

    def homogeneous_line(self) -> np.ndarray:
        """Unit-norm homogeneous line through the two endpoints."""
        line = np.cross(self.a.homogeneous(), self.b.homogeneous())
        return line / np.linalg.norm(line)


@dataclass(frozen=True)
class VanishingPoint:
    """Homogeneous vanishing point, unit norm, with finiteness flag."""

    h: tuple[float, float, float]
    finite: bool
    inhomogeneous: Optional[PixelPoint]

    @staticmethod
    def from_homogeneous(vec) -> "VanishingPoint":
        v = np.asarray(vec, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0 or not np.isfinite(v).all():
            raise InvariantViolation("VanishingPoint.nonzero")
        v = v / norm
        # Canonical sign so equal VPs compare equal: positive h3, falling
        # back to the first nonzero image component for infinite points.
        if abs(v[2]) >= FINITE_VP_THRESHOLD:
            if v[2] < 0:
                v = -v
            finite = True
            inhom = PixelPoint(float(v[0] / v[2]), float(v[1] / v[2]))
        else:
            lead = v[0] if abs(v[0]) > abs(v[1]) else v[1]
            if lead < 0:
                v = -v
            finite = False
            inhom = None
        return VanishingPoint((float(v[0]), float(v[1]), float(v[2])), finite, inhom)

    @staticmethod
    def from_pixel(p: PixelPoint) -> "VanishingPoint":
        return VanishingPoint.from_homogeneous([p.u, p.v, 1.0])

    def as_array(self) -> np.ndarray:
        return np.array(self.h)

    def pixel_homogeneous(self) -> np.ndarray:
        """[u, v, 1] for finite VPs (natural scaling for the constraints)."""
        if not self.finite:
            raise InfiniteVanishingPoint("no pixel coordinates for an infinite VP")
        return np.array([self.inhomogeneous.u, self.inhomogeneous.v, 1.0])


@dataclass(frozen=True)
class VanishingTriple:
    """Three finite VPs aligned to the car length/width/height directions."""

    vx: VanishingPoint
    vy: VanishingPoint
    vz: VanishingPoint

    def __post_init__(self):
        for name, vp in (("vx", self.vx), ("vy", self.vy), ("vz", self.vz)):
            if not vp.finite:
                raise InfiniteVanishingPoint(
                    f"{name} is infinite; calibration needs three finite VPs")
        pts = [self.vx.inhomogeneous, self.vy.inhomogeneous, self.vz.inhomogeneous]
        for i in range(3):
            for j in range(i + 1, 3):
                if pts[i].distance_to(pts[j]) <= 1.0:
                    raise InvariantViolation("VanishingTriple.distinct",
                                             "vanishing points closer than 1 px")

    def points(self) -> list[PixelPoint]:
        return [self.vx.inhomogeneous, self.vy.inhomogeneous, self.vz.inhomogeneous]


@dataclass(frozen=True)
class Edgelet:
    """Short oriented edge fragment used as RANSAC evidence for a VP."""

    center: PixelPoint
    direction: tuple[float, float]
    strength: float = 1.0

    def __post_init__(self):
        n = math.hypot(*self.direction)
        if abs(n - 1.0) > 1e-6:
            raise InvariantViolation("Edgelet.unit_direction", f"|direction| = {n}")
        if self.strength < 0:
            raise InvariantViolation("Edgelet.strength")

    def homogeneous_line(self) -> np.ndarray:
        """Unit-norm line through the center along the edgelet direction."""
        dx, dy = self.direction
        line = np.array([-dy, dx, dy * self.center.u - dx * self.center.v])
        return line / np.linalg.norm(line[:2])


def estimate_vp(segments: Sequence[LineSegment2D]) -> VanishingPoint:
    """Least-squares vanishing point of a set of parallel-line segments.

    Each segment contributes the homogeneous line through its endpoints; the
    VP is the unit vector minimizing sum((l_i . v)^2), i.e. the smallest
    right singular vector of the stacked (unit-norm) lines.  Flags the
    result infinite when |h3| < FINITE_VP_THRESHOLD after normalization.

    Raises Degenerate when the segments are collinear (the solution space
    has dimension > 1).
    """
    if len(segments) < 2:
        raise Degenerate(f"need >= 2 segments, got {len(segments)}")
    # Center and scale the endpoints (Hartley normalization) so the line
    # coefficients are well conditioned, and keep the raw cross products so
    # each line is weighted by its segment length: long annotated lines
    # constrain the VP far better than short ones.
    pts = np.array([[p.u, p.v] for s in segments for p in (s.a, s.b)])
    centroid = pts.mean(axis=0)
    scale = float(np.mean(np.linalg.norm(pts - centroid, axis=1)))
    scale = max(scale, 1.0)
    rows = []
    for s in segments:
        a = np.array([(s.a.u - centroid[0]) / scale, (s.a.v - centroid[1]) / scale, 1.0])
        b = np.array([(s.b.u - centroid[0]) / scale, (s.b.v - centroid[1]) / scale, 1.0])
        rows.append(np.cross(a, b))
    rows = np.stack(rows)
    _, svals, vh = np.linalg.svd(rows)
    # Rank 1 means all constraint lines coincide: every point on the shared
    # line satisfies them, so there is no unique intersection.
    if svals[1] < 1e-10 * svals[0]:
        raise Degenerate("segments are collinear; vanishing point not unique")
    v = vh[-1]
    return VanishingPoint.from_homogeneous(
        [scale * v[0] + centroid[0] * v[2], scale * v[1] + centroid[1] * v[2], v[2]])


def orthocenter_image_center(t: VanishingTriple) -> PixelPoint:
    """Image center as the orthocenter of a finite orthogonal VP triangle.

    Solves the 2x2 linear system expressing that the center lies on the two
    altitudes through the second and third vertices.  Raises
    DegenerateTriangle when the VPs are (near-)collinear.
    """
    (p1, p2, p3) = t.points()
    u1, v1 = p1.u, p1.v
    u2, v2 = p2.u, p2.v
    u3, v3 = p3.u, p3.v
    area2 = abs((u2 - u1) * (v3 - v1) - (u3 - u1) * (v2 - v1))
    if area2 / 2.0 <= MIN_TRIANGLE_AREA:
        raise DegenerateTriangle(f"VP triangle area {area2 / 2.0:.3e} px^2 too small")
    a = np.array([
        [u1 - u2, v1 - v2],
        [u1 - u3, v1 - v3],
    ])
    b = np.array([
        u3 * (u1 - u2) + v3 * (v1 - v2),
        u2 * (u1 - u3) + v2 * (v1 - v3),
    ])
    c = np.linalg.solve(a, b)
    return PixelPoint(float(c[0]), float(c[1]))


def solve_intrinsics(t: VanishingTriple) -> Intrinsics:
    """Intrinsics from three finite orthogonal vanishing points.

    Fixes (cx, cy) at the orthocenter, then solves the three pairwise
    orthogonality constraints, which are linear in (1/fx^2, 1/fy^2), by
    least squares.  Raises NonPositiveFocal (with the residual) if either
    squared estimate is non-positive, which signals a non-orthogonal VP
    configuration rather than silently returning a bad K.
    """
    center = orthocenter_image_center(t)
    vps = t.points()
    rows = []
    rhs = []
    for i in range(3):
        for j in range(i + 1, 3):
            du_i, dv_i = vps[i].u - center.u, vps[i].v - center.v
            du_j, dv_j = vps[j].u - center.u, vps[j].v - center.v
            rows.append([du_i * du_j, dv_i * dv_j])
            rhs.append(-1.0)
    a = np.array(rows)
    b = np.array(rhs)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.linalg.norm(a @ sol - b))
    inv_fx2, inv_fy2 = float(sol[0]), float(sol[1])
    if inv_fx2 <= 0 or inv_fy2 <= 0:
        raise NonPositiveFocal(
            f"squared focal estimates ({inv_fx2:.3e}, {inv_fy2:.3e}) not positive",
            residual)
    return Intrinsics(fx=1.0 / math.sqrt(inv_fx2), fy=1.0 / math.sqrt(inv_fy2),
                      cx=center.u, cy=center.v)


def orthogonality_residual(k: Intrinsics, t: VanishingTriple) -> float:
    """Max |v_i^T omega v_j| over VP pairs, omega = K^-T K^-1.

    Zero for a perfectly orthogonal triple; used as the quality score of a
    recovered calibration.
    """
    omega = k.inverse_matrix().T @ k.inverse_matrix()
    vps = [vp.pixel_homogeneous() for vp in (t.vx, t.vy, t.vz)]
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            worst = max(worst, abs(float(vps[i] @ omega @ vps[j])))
    return worst


def _angle_between_deg(d1: np.ndarray, d2: np.ndarray) -> float:
    """Undirected angle between two 2-vectors, in [0, 90] degrees."""
    n1 = np.linalg.norm(d1)
    n2 = np.linalg.norm(d2)
    if n1 == 0 or n2 == 0:
        return 90.0
    c = abs(float(np.dot(d1, d2)) / (n1 * n2))
    return math.degrees(math.acos(min(1.0, c)))


def _vp_direction_at(vp_h: np.ndarray, point: PixelPoint) -> np.ndarray:
    """Image direction at `point` toward a homogeneous VP (any scale)."""
    if abs(vp_h[2]) * 1e6 >= np.linalg.norm(vp_h[:2]):
        return np.array([vp_h[0] / vp_h[2] - point.u, vp_h[1] / vp_h[2] - point.v])
    return np.array([vp_h[0], vp_h[1]])


def _edgelet_consistent(e: Edgelet, vp_h: np.ndarray, max_angle_deg: float) -> bool:
    to_vp = _vp_direction_at(vp_h, e.center)
    return _angle_between_deg(np.array(e.direction), to_vp) <= max_angle_deg


def ransac_vps(edgelets: Sequence[Edgelet],
               axis_hints: Sequence[LineSegment2D],
               seed: int,
               iterations: int = RANSAC_ITERATIONS,
               inlier_angle_deg: float = RANSAC_INLIER_ANGLE_DEG,
               hint_angle_deg: float = RANSAC_HINT_ANGLE_DEG) -> VanishingTriple:
    """Estimate the orthogonal VP triple from edgelets, guided by axis hints.

    Per world axis: sample edgelet pairs, intersect their lines to
    hypothesize a VP, keep hypotheses whose direction from the hint segment
    midpoint agrees with the hint within hint_angle_deg, and score edgelets
    as inliers when their direction points at the hypothesis within
    inlier_angle_deg.  The winning consensus is refined by estimate_vp on
    the inlier-implied lines.

    The seed is mandatory: runs are deterministic and reproducible.

    Raises InsufficientInliers(axis) when the best consensus for any axis
    has fewer than RANSAC_MIN_INLIERS edgelets.
    """
    if len(edgelets) < 2:
        raise InvariantViolation("ransac_vps.min_edgelets",
                                 f"need >= 2 edgelets, got {len(edgelets)}")
    if len(axis_hints) != 3:
        raise InvariantViolation("ransac_vps.axis_hints", "need one hint per axis")
    rng = np.random.default_rng(seed)
    n = len(edgelets)
    lines = np.stack([e.homogeneous_line() for e in edgelets])
    centers = np.stack([e.center.as_array() for e in edgelets])
    dirs = np.stack([np.array(e.direction) for e in edgelets])
    min_cos = math.cos(math.radians(inlier_angle_deg))
    hint_cos = math.cos(math.radians(hint_angle_deg))

    def consensus_scores(hypos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Inlier counts and truncated-residual (MSAC) scores, vectorized.

        Counting alone plateaus for far vanishing points (sliding the
        hypothesis along the line pencil barely changes any angle), so
        hypotheses are ranked by the sum of squared angular residuals
        truncated at the inlier cone, which count ties cannot resolve.
        """
        finite = np.abs(hypos[:, 2]) * 1e6 >= np.linalg.norm(hypos[:, :2], axis=1)
        to_vp = np.where(
            finite[:, None],
            hypos[:, :2] / np.where(finite, hypos[:, 2], 1.0)[:, None],
            hypos[:, :2])[:, None, :] - np.where(finite[:, None], 1.0, 0.0)[:, None] * centers
        norms = np.linalg.norm(to_vp, axis=2)
        dots = np.abs(np.einsum("mnd,nd->mn", to_vp, dirs))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(norms > 0, np.minimum(dots / norms, 1.0), 0.0)
        angles = np.arccos(cos)
        max_angle = math.radians(inlier_angle_deg)
        counts = (angles <= max_angle).sum(axis=1)
        scores = np.minimum(angles, max_angle).__pow__(2).sum(axis=1)
        return counts, scores

    def inlier_mask(hypo: np.ndarray) -> np.ndarray:
        if abs(hypo[2]) * 1e6 >= np.linalg.norm(hypo[:2]):
            to_vp = hypo[:2] / hypo[2] - centers
        else:
            to_vp = np.broadcast_to(hypo[:2], centers.shape)
        norms = np.linalg.norm(to_vp, axis=1)
        dots = np.abs((dirs * to_vp).sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(norms > 0, dots / norms, 0.0)
        return cos >= min_cos

    refined: list[VanishingPoint] = []
    for axis_name, hint in zip(("x", "y", "z"), axis_hints):
        hint_dir = hint.direction()
        hint_mid = hint.midpoint().as_array()

        # Hypothesize from sampled edgelet pairs, all at once.
        idx_i = np.empty(iterations, dtype=int)
        idx_j = np.empty(iterations, dtype=int)
        for it in range(iterations):
            i, j = rng.choice(n, size=2, replace=False)
            idx_i[it], idx_j[it] = i, j
        hypos = np.cross(lines[idx_i], lines[idx_j])
        norms = np.linalg.norm(hypos, axis=1)
        valid = norms > 1e-12
        hypos = hypos[valid] / norms[valid][:, None]

        # Keep hypotheses whose direction from the hint midpoint agrees
        # with the annotated axis direction.
        finite = np.abs(hypos[:, 2]) * 1e6 >= np.linalg.norm(hypos[:, :2], axis=1)
        to_vp = np.where(finite[:, None],
                         hypos[:, :2] / np.where(finite, hypos[:, 2], 1.0)[:, None]
                         - hint_mid, hypos[:, :2])
        to_norm = np.linalg.norm(to_vp, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            agree = np.abs(to_vp @ hint_dir) / np.where(to_norm > 0, to_norm, np.inf)
        hypos = hypos[agree >= hint_cos]

        if len(hypos) == 0:
            raise InsufficientInliers(axis_name, 0)
        counts, scores = consensus_scores(hypos)
        best = int(np.argmin(scores))  # first minimum: deterministic
        if counts[best] < RANSAC_MIN_INLIERS:
            best_count = int(counts.max())
            if best_count < RANSAC_MIN_INLIERS:
                raise InsufficientInliers(axis_name, best_count)
            best = int(np.argmax(counts))

        def refit(mask: np.ndarray) -> VanishingPoint:
            segments = []
            for idx in np.flatnonzero(mask):
                e = edgelets[idx]
                # Inlier-implied segment: 3 px through the center along the
                # edgelet direction (comfortably above the 2 px floor).
                offset = 1.5 * np.array(e.direction)
                c = e.center.as_array()
                segments.append(LineSegment2D(PixelPoint(*(c - offset)),
                                              PixelPoint(*(c + offset))))
            return estimate_vp(segments)

        # Local optimization: refit, then re-select around the refined
        # point, first at the full cone until the inlier set stabilizes
        # (a cone centered on the noisy hypothesis picks a biased subset),
        # then with tightening cones that cut both the truncated direction
        # noise of the kept inliers and accidental-outlier contamination.
        vp = refit(inlier_mask(hypos[best]))
        for factor in (1.0, 1.0, 0.5, 0.5, 0.25, 0.25, 0.25):
            tight = _cone_mask(vp, centers, dirs, inlier_angle_deg * factor)
            if int(tight.sum()) < RANSAC_MIN_INLIERS:
                break
            vp = refit(tight)
        refined.append(vp)
    return VanishingTriple(vx=refined[0], vy=refined[1], vz=refined[2])


def _cone_mask(vp: VanishingPoint, centers: np.ndarray, dirs: np.ndarray,
               angle_deg: float) -> np.ndarray:
    h = np.array(vp.h)
    if vp.finite:
        to_vp = h[:2] / h[2] - centers
    else:
        to_vp = np.broadcast_to(h[:2], centers.shape)
    norms = np.linalg.norm(to_vp, axis=1)
    dots = np.abs((dirs * to_vp).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(norms > 0, dots / norms, 0.0)
    return cos >= math.cos(math.radians(angle_deg))
