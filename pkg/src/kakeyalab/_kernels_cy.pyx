# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the rasterisation and ball-sum loops."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, ceil

cnp.import_array()

cdef double _EPS = 1e-12


cdef inline bint _inside(double along, double sq, double radius, double margin) nogil:
    cdef double perp2 = sq - along * along
    cdef double perp, da, dr
    if perp2 < 0:
        perp2 = 0
    perp = sqrt(perp2)
    if margin > 0:
        da = fabs(along) - 0.5
        if da < 0:
            da = 0
        dr = perp - radius
        if dr < 0:
            dr = 0
        return da * da + dr * dr <= margin * margin + _EPS
    return fabs(along) <= 0.5 + _EPS and perp <= radius + _EPS


cdef inline void _window(double o, double h, Py_ssize_t size, double c, double vi,
                         double radius, double margin, Py_ssize_t* lo, Py_ssize_t* hi) nogil:
    cdef double avi = fabs(vi)
    cdef double s = 1.0 - avi * avi
    if s < 0:
        s = 0
    cdef double ext = 0.5 * avi + radius * sqrt(s) + margin + h
    cdef Py_ssize_t a = <Py_ssize_t>floor((c - ext - o) / h)
    cdef Py_ssize_t b = <Py_ssize_t>ceil((c + ext - o) / h) + 1
    lo[0] = a if a > 0 else 0
    hi[0] = b if b < size else size


def raster_tubes(out, origin, double h, centers, dirs, double radius, double margin, weights):
    cdef cnp.ndarray[double, ndim=2] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] V = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] W = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] O = np.ascontiguousarray(origin, dtype=np.float64)
    if out.ndim == 2:
        _raster2(out, O, h, C, V, radius, margin, W)
    elif out.ndim == 3:
        _raster3(out, O, h, C, V, radius, margin, W)
    else:
        raise ValueError("only 2D and 3D grids are supported")
    return out


cdef void _raster2(double[:, ::1] out, double[::1] O, double h, double[:, ::1] C,
                   double[:, ::1] V, double radius, double margin, double[::1] W) nogil:
    cdef Py_ssize_t t, i, j, lo0, hi0, lo1, hi1
    cdef double x, y, along, c0, c1, v0, v1
    for t in range(C.shape[0]):
        c0 = C[t, 0]; c1 = C[t, 1]; v0 = V[t, 0]; v1 = V[t, 1]
        _window(O[0], h, out.shape[0], c0, v0, radius, margin, &lo0, &hi0)
        _window(O[1], h, out.shape[1], c1, v1, radius, margin, &lo1, &hi1)
        for i in range(lo0, hi0):
            x = O[0] + (i + 0.5) * h - c0
            for j in range(lo1, hi1):
                y = O[1] + (j + 0.5) * h - c1
                along = x * v0 + y * v1
                if _inside(along, x * x + y * y, radius, margin):
                    out[i, j] += W[t]


cdef void _raster3(double[:, :, ::1] out, double[::1] O, double h, double[:, ::1] C,
                   double[:, ::1] V, double radius, double margin, double[::1] W) nogil:
    cdef Py_ssize_t t, i, j, k, lo0, hi0, lo1, hi1, lo2, hi2
    cdef double x, y, z, along, c0, c1, c2, v0, v1, v2
    for t in range(C.shape[0]):
        c0 = C[t, 0]; c1 = C[t, 1]; c2 = C[t, 2]
        v0 = V[t, 0]; v1 = V[t, 1]; v2 = V[t, 2]
        _window(O[0], h, out.shape[0], c0, v0, radius, margin, &lo0, &hi0)
        _window(O[1], h, out.shape[1], c1, v1, radius, margin, &lo1, &hi1)
        _window(O[2], h, out.shape[2], c2, v2, radius, margin, &lo2, &hi2)
        for i in range(lo0, hi0):
            x = O[0] + (i + 0.5) * h - c0
            for j in range(lo1, hi1):
                y = O[1] + (j + 0.5) * h - c1
                for k in range(lo2, hi2):
                    z = O[2] + (k + 0.5) * h - c2
                    along = x * v0 + y * v1 + z * v2
                    if _inside(along, x * x + y * y + z * z, radius, margin):
                        out[i, j, k] += W[t]


def ball_sums(grid, starts, counts, Py_ssize_t stride, offsets):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] off = np.ascontiguousarray(offsets, dtype=np.int64).reshape(len(offsets), grid.ndim)
    out = np.zeros(tuple(int(c) for c in counts), dtype=np.float64)
    g = np.ascontiguousarray(grid, dtype=np.float64)
    if grid.ndim == 2:
        _bsum2(g, int(starts[0]), int(starts[1]), stride, off, out)
    elif grid.ndim == 3:
        _bsum3(g, int(starts[0]), int(starts[1]), int(starts[2]), stride, off, out)
    else:
        raise ValueError("only 2D and 3D grids are supported")
    return out


cdef void _bsum2(double[:, ::1] g, Py_ssize_t s0, Py_ssize_t s1, Py_ssize_t stride,
                 cnp.int64_t[:, ::1] off, double[:, ::1] out) nogil:
    cdef Py_ssize_t a, b, o, i, j
    cdef double acc
    for a in range(out.shape[0]):
        for b in range(out.shape[1]):
            acc = 0
            for o in range(off.shape[0]):
                i = s0 + a * stride + off[o, 0]
                j = s1 + b * stride + off[o, 1]
                if 0 <= i < g.shape[0] and 0 <= j < g.shape[1]:
                    acc += g[i, j]
            out[a, b] = acc


cdef void _bsum3(double[:, :, ::1] g, Py_ssize_t s0, Py_ssize_t s1, Py_ssize_t s2,
                 Py_ssize_t stride, cnp.int64_t[:, ::1] off, double[:, :, ::1] out) nogil:
    cdef Py_ssize_t a, b, c, o, i, j, k
    cdef double acc
    for a in range(out.shape[0]):
        for b in range(out.shape[1]):
            for c in range(out.shape[2]):
                acc = 0
                for o in range(off.shape[0]):
                    i = s0 + a * stride + off[o, 0]
                    j = s1 + b * stride + off[o, 1]
                    k = s2 + c * stride + off[o, 2]
                    if 0 <= i < g.shape[0] and 0 <= j < g.shape[1] and 0 <= k < g.shape[2]:
                        acc += g[i, j, k]
                out[a, b, c] = acc
