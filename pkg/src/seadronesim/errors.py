"""Exception types shared across the package."""


class SeaDroneSimError(Exception):
    """Base class for all package errors."""


class MeshError(SeaDroneSimError):
    """Raised for unreadable, malformed, or empty triangle meshes."""


class SceneError(SeaDroneSimError):
    """Raised when a scene description violates its invariants."""


class RenderError(SeaDroneSimError):
    """Raised when a render produces invalid output (NaN/Inf radiance)."""


class ConfigError(SeaDroneSimError):
    """Raised for invalid JSON configuration files."""


class CocoValidationError(SeaDroneSimError):
    """Raised when a COCO dataset or results file fails schema validation."""
