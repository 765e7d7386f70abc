"""Numpy fallback rasterizer kernel.

Mirrors _kernels.pyx operation-for-operation: identical formulas, identical
evaluation order, division (not reciprocal-multiply) in the same places, so
the two backends produce bit-identical hit times on non-degenerate input.
(The single known divergence is the NaN produced by a ray exactly parallel
to a slab it starts on, which has measure zero for sampled scenes.)
"""

import numpy as np

NEAR = 1e-6


def hit_times(eye, dirs, table):
    """Ray-parameter t of the nearest hit per object per pixel (inf = miss).

    eye: (3,) float64; dirs: (H, W, 3) float64; table: (n, 8) float64 rows
    from geometry.object_table.  Returns (n, H, W) float64.
    """
    eye = np.asarray(eye, dtype=np.float64)
    dx = dirs[:, :, 0]
    dy = dirs[:, :, 1]
    dz = dirs[:, :, 2]
    n = table.shape[0]
    out = np.full((n,) + dx.shape, np.inf, dtype=np.float64)
    for i in range(n):
        kind = int(table[i, 0])
        cx, cy, cz, r, h, ct, st = table[i, 1:8]
        ox = eye[0] - cx
        oy = eye[1] - cy
        oz = eye[2] - cz
        if kind == 0:
            out[i] = _sphere(dx, dy, dz, ox, oy, oz, r)
        elif kind == 1:
            out[i] = _cube(dx, dy, dz, ox, oy, oz, r, h, ct, st)
        else:
            out[i] = _cylinder(dx, dy, dz, ox, oy, oz, r, h)
    return out


def _sphere(dx, dy, dz, ox, oy, oz, r):
    a = dx * dx + dy * dy + dz * dz
    b = 2.0 * (dx * ox + dy * oy + dz * oz)
    c = (ox * ox + oy * oy + oz * oz) - r * r
    disc = b * b - 4.0 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - sq) / (2.0 * a)
    t2 = (-b + sq) / (2.0 * a)
    t = np.where(t1 > NEAR, t1, np.where(t2 > NEAR, t2, np.inf))
    return np.where(disc >= 0.0, t, np.inf)


def _cube(dx, dy, dz, ox, oy, oz, h, hz, ct, st):
    # Rotate the ray into the box frame (rotation is about the vertical axis).
    lox = ct * ox + st * oy
    loy = ct * oy - st * ox
    loz = oz
    ldx = ct * dx + st * dy
    ldy = ct * dy - st * dx
    ldz = dz
    with np.errstate(divide="ignore", invalid="ignore"):
        invx = 1.0 / ldx
        invy = 1.0 / ldy
        invz = 1.0 / ldz
    tx1 = (-h - lox) * invx
    tx2 = (h - lox) * invx
    ty1 = (-h - loy) * invy
    ty2 = (h - loy) * invy
    tz1 = (-hz - loz) * invz
    tz2 = (hz - loz) * invz
    txlo = np.minimum(tx1, tx2)
    txhi = np.maximum(tx1, tx2)
    tylo = np.minimum(ty1, ty2)
    tyhi = np.maximum(ty1, ty2)
    tzlo = np.minimum(tz1, tz2)
    tzhi = np.maximum(tz1, tz2)
    tmin = np.maximum(np.maximum(txlo, tylo), tzlo)
    tmax = np.minimum(np.minimum(txhi, tyhi), tzhi)
    valid = (tmax >= tmin) & (tmax > NEAR)
    return np.where(valid, np.where(tmin > NEAR, tmin, tmax), np.inf)


def _cylinder(dx, dy, dz, ox, oy, oz, r, h):
    a = dx * dx + dy * dy
    b = 2.0 * (dx * ox + dy * oy)
    c = (ox * ox + oy * oy) - r * r
    disc = b * b - 4.0 * a * c
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.sqrt(np.maximum(disc, 0.0))
        t1 = (-b - sq) / (2.0 * a)
        t2 = (-b + sq) / (2.0 * a)
        invz = 1.0 / dz
    side_ok = disc >= 0.0
    z1 = oz + t1 * dz
    z2 = oz + t2 * dz
    best = np.full(dx.shape, np.inf)
    with np.errstate(invalid="ignore"):
        v1 = side_ok & (t1 > NEAR) & (z1 >= -h) & (z1 <= h)
        best = np.where(v1 & (t1 < best), t1, best)
        v2 = side_ok & (t2 > NEAR) & (z2 >= -h) & (z2 <= h)
        best = np.where(v2 & (t2 < best), t2, best)
        tb = (-h - oz) * invz
        xb = ox + tb * dx
        yb = oy + tb * dy
        vb = (tb > NEAR) & (xb * xb + yb * yb <= r * r)
        best = np.where(vb & (tb < best), tb, best)
        tt = (h - oz) * invz
        xt = ox + tt * dx
        yt = oy + tt * dy
        vt = (tt > NEAR) & (xt * xt + yt * yt <= r * r)
        best = np.where(vt & (tt < best), tt, best)
    return best
