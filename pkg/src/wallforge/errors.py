"""Domain error types shared across the package."""


class WallforgeError(Exception):
    """Base class for all domain errors. CLI maps these to exit code 1."""


# --- plan ingestion ---

class MalformedDxf(WallforgeError):
    pass


class UnsupportedVersion(WallforgeError):
    pass


class NoOutline(WallforgeError):
    pass


class NonOrthogonalWall(WallforgeError):
    def __init__(self, entity_id: int, message: str = ""):
        self.entity_id = entity_id
        super().__init__(message or f"entity {entity_id} is not axis-aligned")


# --- rasterizer / dataset ---

class PlanTooLarge(WallforgeError):
    pass


class NoShearWalls(WallforgeError):
    pass


class IoFailure(WallforgeError):
    pass


class InvalidOverride(WallforgeError):
    pass


# --- diffusion client ---

class Unreachable(WallforgeError):
    pass


class MalformedResponse(WallforgeError):
    pass


class ApiError(WallforgeError):
    def __init__(self, status: int, body_excerpt: str):
        self.status = status
        self.body_excerpt = body_excerpt
        super().__init__(f"API error {status}: {body_excerpt[:200]}")


class DecodeFailure(WallforgeError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"could not decode candidate {index}")


class GridTooLarge(WallforgeError):
    pass


# --- vectorizer ---

class DegenerateComponent(WallforgeError):
    pass


# --- metrics ---

class InsufficientLateralSystem(WallforgeError):
    pass


class EigenFailure(WallforgeError):
    pass


class NonPositiveDefinite(WallforgeError):
    pass


# --- exporter ---

class DimensionMismatch(WallforgeError):
    pass


class UnsupportedFormat(WallforgeError):
    pass


# --- studio service ---

class DuplicateName(WallforgeError):
    pass


class DependencyMissing(WallforgeError):
    pass


class OutOfRange(WallforgeError):
    pass


class UnknownLayout(WallforgeError):
    pass


class InvalidGeometry(WallforgeError):
    pass


class BindFailure(WallforgeError):
    pass
