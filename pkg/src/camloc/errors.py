"""Exception hierarchy for the camloc toolkit.

Every failure mode raised by the estimation core derives from CamlocError so
callers (CLI, service) can map them to stable error codes.  Geometry failures
that share a recovery strategy share a base class (e.g. DegenerateGeometry).
"""


class CamlocError(Exception):
    """Base class for all camloc errors."""

    code = "error"


class InvariantViolation(CamlocError):
    """A domain type's invariant does not hold for the given values."""

    code = "invariant_violation"

    def __init__(self, invariant: str, message: str = ""):
        self.invariant = invariant
        super().__init__(message or invariant)


class SchemaViolation(CamlocError):
    """A document does not match the annotation or map schema."""

    code = "schema_violation"

    def __init__(self, field_path: str, message: str = ""):
        self.field_path = field_path
        super().__init__(message or f"schema violation at {field_path}")


class EmptyInput(CamlocError):
    code = "empty_input"


class LengthMismatch(CamlocError):
    code = "length_mismatch"


# --- projection / rotation ------------------------------------------------

class BehindCamera(CamlocError):
    """A point maps to non-positive depth along the optical axis."""

    code = "behind_camera"


class Singular(CamlocError):
    """A matrix required to be invertible is numerically singular."""

    code = "singular"


class DegenerateGeometry(CamlocError):
    """Base for inputs whose geometry admits no unique solution."""

    code = "degenerate"


class Degenerate(DegenerateGeometry):
    """Line set is collinear: the vanishing point is not unique."""

    code = "degenerate_lines"


class DegenerateTriangle(DegenerateGeometry):
    """Vanishing points are collinear; the orthocenter is undefined."""

    code = "degenerate_triangle"


class InfiniteVanishingPoint(DegenerateGeometry):
    """A triple contains an infinite vanishing point.

    The implemented calibration path requires three finite vanishing points;
    the two-finite-plus-one-infinite configuration is rejected explicitly.
    """

    code = "infinite_vanishing_point"


class NonPositiveFocal(CamlocError):
    """Orthogonality constraints yield a non-positive squared focal length."""

    code = "non_positive_focal"

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(message)


class NotARotation(CamlocError):
    """Vanishing directions are too inconsistent to form a rotation."""

    code = "not_a_rotation"


class InsufficientInliers(CamlocError):
    """RANSAC consensus for one axis fell below the minimum support."""

    code = "insufficient_inliers"

    def __init__(self, axis: str, best_count: int):
        self.axis = axis
        self.best_count = best_count
        super().__init__(f"axis {axis!r}: best consensus {best_count} < 4 edgelets")


class ParallelProjection(CamlocError):
    """Closed-form translation is singular for this pixel pair."""

    code = "parallel_projection"


class NegativeDepth(CamlocError):
    """Recovered translation places the world origin behind the camera."""

    code = "negative_depth"


# --- ground plane sensors ---------------------------------------------------

class HorizonRay(CamlocError):
    """Back-projected ray is parallel to the ground plane."""

    code = "horizon_ray"


class VerticalInconsistent(CamlocError):
    """Top-of-building pixel is too far from the vertical through the base."""

    code = "vertical_inconsistent"

    def __init__(self, message: str, residual_px: float):
        self.residual_px = residual_px
        super().__init__(message)


class TooShort(CamlocError):
    """Track has fewer than two usable samples."""

    code = "too_short"


# --- geodesy ----------------------------------------------------------------

class RangeExceeded(CamlocError):
    """Offset distance is outside the flat-earth approximation regime."""

    code = "range_exceeded"


class PolarSingularity(CamlocError):
    """Reference latitude is too close to a pole for the longitude scale."""

    code = "polar_singularity"


class NoIntersection(CamlocError):
    """The two range circles do not intersect."""

    code = "no_intersection"


class AmbiguousOrdering(CamlocError):
    """Reference pixels share the same image column; ordering rule undefined."""

    code = "ambiguous_ordering"


# --- context resolution -------------------------------------------------------

class MappingInfeasible(CamlocError):
    """No corner mapping satisfies the two-circle feasibility conditions."""

    code = "mapping_infeasible"


class FootprintTooComplex(CamlocError):
    """Footprint has too many vertices for exhaustive corner matching."""

    code = "footprint_too_complex"


class GeotagOutsideFootprint(UserWarning):
    """Landmark geo tag lies outside its footprint polygon.

    Warning, not an error: the face-distance compensation assumes the tag is
    interior, so results may be biased.
    """


# --- synthesis / pipeline -----------------------------------------------------

class Unsatisfiable(CamlocError):
    """Rejection sampling could not produce a scene within the attempt cap."""

    code = "unsatisfiable"


class AllBundlesInvalid(CamlocError):
    """Every input bundle was rejected by validation."""

    code = "all_bundles_invalid"
