"""Z-buffer rasterization of scenes into per-object masks and occlusion data.

The hot per-pixel kernel is the compiled extension when available, with the
numpy implementation as fallback (override via REFDIAG_RASTER_BACKEND).
"""

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InvalidReferenceError, UndefinedRatioError
from ..masks import Mask
from ..vocab import VISIBILITY_AMBIGUOUS, VISIBILITY_FULL, VISIBILITY_PARTIAL
from . import kernels_py
from .geometry import object_table, ray_grid

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"numpy": kernels_py.hit_times}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled.hit_times

_env = os.environ.get("REFDIAG_RASTER_BACKEND")
if _env is not None and _env not in _BACKENDS:
    raise ConfigError(f"REFDIAG_RASTER_BACKEND={_env!r} unavailable; have {sorted(_BACKENDS)}")

DEFAULT_BACKEND = _env or ("compiled" if _compiled is not None else "numpy")

# Occlusion-ratio threshold: strictly above this is "partially visible",
# exactly zero is "fully visible", anything between is ambiguous and is
# never described by the generator.
PARTIAL_THRESHOLD = 0.2


def available_backends():
    return tuple(sorted(_BACKENDS))


@dataclass(frozen=True)
class RenderResult:
    width: int
    height: int
    object_ids: tuple
    full: np.ndarray       # (n, H, W) bool, per-object unoccluded silhouette
    visible: np.ndarray    # (n, H, W) bool, after the z-buffer
    depth_index: np.ndarray  # (H, W) int32 row index of nearest object, -1 if none
    bboxes: tuple          # per object: (x0, y0, x1, y1) inclusive, or None
    occlusion: tuple       # per object: ratio in [0, 1], or None if off-screen
    eye_dist2: tuple       # per object: squared camera-center distance

    def _row(self, oid):
        try:
            return self.object_ids.index(oid)
        except ValueError:
            raise InvalidReferenceError(f"object {oid} was not rendered") from None

    def full_mask(self, oid):
        return Mask.from_array(self.full[self._row(oid)])

    def visible_mask(self, oid):
        return Mask.from_array(self.visible[self._row(oid)])

    def union_visible(self, oids):
        acc = np.zeros((self.height, self.width), dtype=bool)
        for oid in oids:
            acc |= self.visible[self._row(oid)]
        return Mask.from_array(acc)

    def bbox(self, oid):
        return self.bboxes[self._row(oid)]

    def offscreen(self, oid):
        return self.bboxes[self._row(oid)] is None


def rasterize(scene, backend=None):
    """Render a scene to per-object full/visible masks plus occlusion ratios.

    Objects entirely outside the frustum get empty masks and an undefined
    occlusion ratio; that is not an error.
    """
    kernel = _BACKENDS[backend or DEFAULT_BACKEND]
    camera = scene.camera
    width, height = camera.image_size
    eye = np.asarray(camera.eye, dtype=np.float64)
    n = len(scene.objects)
    if n == 0:
        raise ConfigError("cannot rasterize a scene with no objects")
    t = np.asarray(kernel(eye, ray_grid(camera), object_table(scene)))
    full = np.isfinite(t)
    nearest = np.argmin(t, axis=0).astype(np.int32)  # ties -> lowest row index
    hit_any = np.isfinite(np.min(t, axis=0))
    depth_index = np.where(hit_any, nearest, np.int32(-1))
    rows = np.arange(n, dtype=np.int32)
    visible = (depth_index[None, :, :] == rows[:, None, None])

    object_ids = tuple(o.id for o in scene.objects)
    eye_dist2 = []
    for o in scene.objects:
        d = (
            (o.position[0] - eye[0]) ** 2
            + (o.position[1] - eye[1]) ** 2
            + (o.position[2] - eye[2]) ** 2
        )
        eye_dist2.append(float(d))

    bboxes = []
    for i in range(n):
        ys, xs = np.nonzero(full[i])
        if len(xs) == 0:
            bboxes.append(None)
        else:
            bboxes.append((int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())))

    occlusion = []
    for i in range(n):
        box = bboxes[i]
        if box is None:
            occlusion.append(None)
            continue
        x0, y0, x1, y1 = box
        nearer = np.zeros((height, width), dtype=bool)
        for j in range(n):
            if j != i and eye_dist2[j] < eye_dist2[i]:
                nearer |= visible[j]
        covered = int(nearer[y0:y1 + 1, x0:x1 + 1].sum())
        area = (x1 - x0 + 1) * (y1 - y0 + 1)
        occlusion.append(covered / area)

    return RenderResult(
        width=width,
        height=height,
        object_ids=object_ids,
        full=full,
        visible=visible,
        depth_index=depth_index,
        bboxes=tuple(bboxes),
        occlusion=tuple(occlusion),
        eye_dist2=tuple(eye_dist2),
    )


def occlusion_ratio(render, oid):
    """Fraction of the object's (unoccluded) bbox covered by visible masks of
    strictly nearer objects.  Undefined for off-screen objects."""
    ratio = render.occlusion[render._row(oid)]
    if ratio is None:
        raise UndefinedRatioError(f"object {oid} is off-screen; occlusion undefined")
    return ratio


def classify_visibility(ratio):
    """0 -> fully visible; > 0.2 -> partially visible; else ambiguous."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio outside [0, 1]: {ratio}")
    if ratio == 0.0:
        return VISIBILITY_FULL
    if ratio > PARTIAL_THRESHOLD:
        return VISIBILITY_PARTIAL
    return VISIBILITY_AMBIGUOUS


def classify_object(render, oid):
    return classify_visibility(occlusion_ratio(render, oid))
