"""Shared camera/ray precomputation for both rasterizer kernels.

Everything that could introduce libm differences (normalization, trig) is
computed once here in numpy and handed to the kernels as plain float64 data,
so the compiled and fallback kernels see bit-identical inputs.
"""

import math

import numpy as np

SHAPE_CODES = {"sphere": 0, "cube": 1, "cylinder": 2}


def camera_basis(camera):
    eye = np.asarray(camera.eye, dtype=np.float64)
    look = np.asarray(camera.look_at, dtype=np.float64)
    up_hint = np.asarray(camera.up, dtype=np.float64)
    forward = look - eye
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, up_hint)
    right = right / np.linalg.norm(right)
    up = np.cross(right, forward)
    return forward, right, up


def ray_grid(camera):
    """Per-pixel (unnormalized) ray directions through pixel centers.

    Depth comparisons use the ray parameter t, which is consistent within a
    pixel because every object shares the same direction vector there.
    """
    width, height = camera.image_size
    forward, right, up = camera_basis(camera)
    focal = (height / 2.0) / math.tan(math.radians(camera.vertical_fov) / 2.0)
    u = ((np.arange(width, dtype=np.float64) + 0.5) - width / 2.0) / focal
    v = (height / 2.0 - (np.arange(height, dtype=np.float64) + 0.5)) / focal
    dirs = (
        forward[None, None, :]
        + u[None, :, None] * right[None, None, :]
        + v[:, None, None] * up[None, None, :]
    )
    return np.ascontiguousarray(dirs, dtype=np.float64)


def object_table(scene):
    """Pack object geometry into a float table consumed by the kernels.

    Columns: shape code, center xyz, radius, vertical half-extent,
    cos/sin of the rotation angle.
    """
    rows = np.zeros((len(scene.objects), 8), dtype=np.float64)
    for i, o in enumerate(scene.objects):
        r = o.base_radius
        theta = math.radians(o.rotation)
        rows[i] = (
            SHAPE_CODES[o.shape],
            o.position[0],
            o.position[1],
            o.position[2],
            r,
            r,  # cubes and cylinders have half-height == radius
            math.cos(theta),
            math.sin(theta),
        )
    return rows
