# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled rasterizer kernel.

Keep every formula and its evaluation order in lockstep with kernels_py.py;
the two backends are required to produce bit-identical hit times.  Compiled
with -ffp-contract=off so the C compiler cannot fuse multiply-adds.
"""

from libc.math cimport INFINITY, sqrt

import numpy as np

DEF NEAR = 1e-6


def hit_times(eye_in, dirs_in, table_in):
    """Same contract as kernels_py.hit_times."""
    cdef double[::1] eye = np.ascontiguousarray(eye_in, dtype=np.float64)
    cdef double[:, :, ::1] dirs = np.ascontiguousarray(dirs_in, dtype=np.float64)
    cdef double[:, ::1] table = np.ascontiguousarray(table_in, dtype=np.float64)
    cdef Py_ssize_t n = table.shape[0]
    cdef Py_ssize_t height = dirs.shape[0]
    cdef Py_ssize_t width = dirs.shape[1]
    out_arr = np.full((n, height, width), np.inf, dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, y, x
    cdef int kind
    cdef double cx, cy, cz, r, h, ct, st
    cdef double ox, oy, oz
    cdef double dx, dy, dz

    for i in range(n):
        kind = <int> table[i, 0]
        cx = table[i, 1]
        cy = table[i, 2]
        cz = table[i, 3]
        r = table[i, 4]
        h = table[i, 5]
        ct = table[i, 6]
        st = table[i, 7]
        ox = eye[0] - cx
        oy = eye[1] - cy
        oz = eye[2] - cz
        with nogil:
            for y in range(height):
                for x in range(width):
                    dx = dirs[y, x, 0]
                    dy = dirs[y, x, 1]
                    dz = dirs[y, x, 2]
                    if kind == 0:
                        out[i, y, x] = _sphere(dx, dy, dz, ox, oy, oz, r)
                    elif kind == 1:
                        out[i, y, x] = _cube(dx, dy, dz, ox, oy, oz, r, h, ct, st)
                    else:
                        out[i, y, x] = _cylinder(dx, dy, dz, ox, oy, oz, r, h)
    return out_arr


cdef inline double _sphere(double dx, double dy, double dz,
                           double ox, double oy, double oz, double r) nogil:
    cdef double a = dx * dx + dy * dy + dz * dz
    cdef double b = 2.0 * (dx * ox + dy * oy + dz * oz)
    cdef double c = (ox * ox + oy * oy + oz * oz) - r * r
    cdef double disc = b * b - 4.0 * a * c
    cdef double sq, t1, t2
    if disc >= 0.0:
        sq = sqrt(disc)
        t1 = (-b - sq) / (2.0 * a)
        if t1 > NEAR:
            return t1
        t2 = (-b + sq) / (2.0 * a)
        if t2 > NEAR:
            return t2
    return INFINITY


cdef inline double _cube(double dx, double dy, double dz,
                         double ox, double oy, double oz,
                         double h, double hz, double ct, double st) nogil:
    cdef double lox = ct * ox + st * oy
    cdef double loy = ct * oy - st * ox
    cdef double loz = oz
    cdef double ldx = ct * dx + st * dy
    cdef double ldy = ct * dy - st * dx
    cdef double ldz = dz
    cdef double invx = 1.0 / ldx
    cdef double invy = 1.0 / ldy
    cdef double invz = 1.0 / ldz
    cdef double tx1 = (-h - lox) * invx
    cdef double tx2 = (h - lox) * invx
    cdef double ty1 = (-h - loy) * invy
    cdef double ty2 = (h - loy) * invy
    cdef double tz1 = (-hz - loz) * invz
    cdef double tz2 = (hz - loz) * invz
    cdef double txlo = tx1 if tx1 < tx2 else tx2
    cdef double txhi = tx1 if tx1 > tx2 else tx2
    cdef double tylo = ty1 if ty1 < ty2 else ty2
    cdef double tyhi = ty1 if ty1 > ty2 else ty2
    cdef double tzlo = tz1 if tz1 < tz2 else tz2
    cdef double tzhi = tz1 if tz1 > tz2 else tz2
    cdef double tmin = txlo if txlo > tylo else tylo
    if tzlo > tmin:
        tmin = tzlo
    cdef double tmax = txhi if txhi < tyhi else tyhi
    if tzhi < tmax:
        tmax = tzhi
    if tmax >= tmin and tmax > NEAR:
        return tmin if tmin > NEAR else tmax
    return INFINITY


cdef inline double _cylinder(double dx, double dy, double dz,
                             double ox, double oy, double oz,
                             double r, double h) nogil:
    cdef double a = dx * dx + dy * dy
    cdef double b = 2.0 * (dx * ox + dy * oy)
    cdef double c = (ox * ox + oy * oy) - r * r
    cdef double disc = b * b - 4.0 * a * c
    cdef double best = INFINITY
    cdef double sq, t1, t2, z1, z2, invz, tb, xb, yb, tt, xt, yt
    if disc >= 0.0:
        sq = sqrt(disc)
        t1 = (-b - sq) / (2.0 * a)
        z1 = oz + t1 * dz
        if t1 > NEAR and z1 >= -h and z1 <= h and t1 < best:
            best = t1
        t2 = (-b + sq) / (2.0 * a)
        z2 = oz + t2 * dz
        if t2 > NEAR and z2 >= -h and z2 <= h and t2 < best:
            best = t2
    invz = 1.0 / dz
    tb = (-h - oz) * invz
    xb = ox + tb * dx
    yb = oy + tb * dy
    if tb > NEAR and xb * xb + yb * yb <= r * r and tb < best:
        best = tb
    tt = (h - oz) * invz
    xt = ox + tt * dx
    yt = oy + tt * dy
    if tt > NEAR and xt * xt + yt * yt <= r * r and tt < best:
        best = tt
    return best
