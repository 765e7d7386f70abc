from .engine import (
    DEFAULT_BACKEND,
    PARTIAL_THRESHOLD,
    RenderResult,
    available_backends,
    classify_object,
    classify_visibility,
    occlusion_ratio,
    rasterize,
)

__all__ = [
    "DEFAULT_BACKEND",
    "PARTIAL_THRESHOLD",
    "RenderResult",
    "available_backends",
    "classify_object",
    "classify_visibility",
    "occlusion_ratio",
    "rasterize",
]
