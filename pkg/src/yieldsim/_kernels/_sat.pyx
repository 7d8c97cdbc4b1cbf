# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled separating-axis kernels for oriented-rectangle collision checks."""
from libc.math cimport cos, fabs, sin, sqrt


cdef inline bint _overlap(double ax, double ay, double ah, double al, double aw,
                          double bx, double by, double bh, double bl, double bw) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double ca = cos(ah), sa = sin(ah)
    cdef double cb = cos(bh), sb = sin(bh)
    cdef double hla = 0.5 * al, hwa = 0.5 * aw
    cdef double hlb = 0.5 * bl, hwb = 0.5 * bw
    cdef double ux, uy, ra, rb
    cdef int k
    for k in range(4):
        if k == 0:
            ux = ca; uy = sa
        elif k == 1:
            ux = -sa; uy = ca
        elif k == 2:
            ux = cb; uy = sb
        else:
            ux = -sb; uy = cb
        ra = hla * fabs(ux * ca + uy * sa) + hwa * fabs(uy * ca - ux * sa)
        rb = hlb * fabs(ux * cb + uy * sb) + hwb * fabs(uy * cb - ux * sb)
        if fabs(ux * dx + uy * dy) > ra + rb:
            return False
    return True


def obb_overlap(double ax, double ay, double ah, double al, double aw,
                double bx, double by, double bh, double bl, double bw):
    """Overlap test for two oriented rectangles; touching counts as overlap."""
    return _overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw)


def sat_margin(double ax, double ay, double ah, double al, double aw,
               double bx, double by, double bh, double bl, double bw):
    """Largest projected gap over the four face axes (negative when overlapping)."""
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double ca = cos(ah), sa = sin(ah)
    cdef double cb = cos(bh), sb = sin(bh)
    cdef double hla = 0.5 * al, hwa = 0.5 * aw
    cdef double hlb = 0.5 * bl, hwb = 0.5 * bw
    cdef double ux, uy, ra, rb, gap
    cdef double best = -1e300
    cdef int k
    for k in range(4):
        if k == 0:
            ux = ca; uy = sa
        elif k == 1:
            ux = -sa; uy = ca
        elif k == 2:
            ux = cb; uy = sb
        else:
            ux = -sb; uy = cb
        ra = hla * fabs(ux * ca + uy * sa) + hwa * fabs(uy * ca - ux * sa)
        rb = hlb * fabs(ux * cb + uy * sb) + hwb * fabs(uy * cb - ux * sb)
        gap = fabs(ux * dx + uy * dy) - (ra + rb)
        if gap > best:
            best = gap
    return best


def first_overlap_index(double[::1] xa, double[::1] ya, double[::1] ha,
                        double[::1] xb, double[::1] yb, double[::1] hb,
                        double la, double wa, double lb, double wb, int start):
    """Smallest index >= start at which the two box sweeps overlap, else -1."""
    cdef Py_ssize_t n = xa.shape[0]
    cdef double reach = 0.5 * sqrt(la * la + wa * wa) + 0.5 * sqrt(lb * lb + wb * wb)
    cdef double reach_sq = reach * reach
    cdef double dx, dy
    cdef Py_ssize_t i
    for i in range(start, n):
        dx = xb[i] - xa[i]
        dy = yb[i] - ya[i]
        if dx * dx + dy * dy > reach_sq:
            continue
        if _overlap(xa[i], ya[i], ha[i], la, wa, xb[i], yb[i], hb[i], lb, wb):
            return i
    return -1
