"""Pure-Python separating-axis kernels (fallback for the compiled core)."""
from math import cos, hypot, sin


def obb_overlap(ax, ay, ah, al, aw, bx, by, bh, bl, bw):
    """Overlap test for two oriented rectangles via the separating-axis test.

    Checks the four face normals; touching boundaries count as overlap.
    """
    dx = bx - ax
    dy = by - ay
    ca, sa = cos(ah), sin(ah)
    cb, sb = cos(bh), sin(bh)
    hla, hwa = 0.5 * al, 0.5 * aw
    hlb, hwb = 0.5 * bl, 0.5 * bw
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        ra = hla * abs(ux * ca + uy * sa) + hwa * abs(uy * ca - ux * sa)
        rb = hlb * abs(ux * cb + uy * sb) + hwb * abs(uy * cb - ux * sb)
        if abs(ux * dx + uy * dy) > ra + rb:
            return False
    return True


def sat_margin(ax, ay, ah, al, aw, bx, by, bh, bl, bw):
    """Largest projected gap over the four face axes.

    Positive: the rectangles are separated by at least this much along a
    face axis. Negative: they overlap, and the absolute value is the
    minimal translation along a face axis that separates them.
    """
    dx = bx - ax
    dy = by - ay
    ca, sa = cos(ah), sin(ah)
    cb, sb = cos(bh), sin(bh)
    hla, hwa = 0.5 * al, 0.5 * aw
    hlb, hwb = 0.5 * bl, 0.5 * bw
    best = -float("inf")
    for ux, uy in ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb)):
        ra = hla * abs(ux * ca + uy * sa) + hwa * abs(uy * ca - ux * sa)
        rb = hlb * abs(ux * cb + uy * sb) + hwb * abs(uy * cb - ux * sb)
        gap = abs(ux * dx + uy * dy) - (ra + rb)
        if gap > best:
            best = gap
    return best


def first_overlap_index(xa, ya, ha, xb, yb, hb, la, wa, lb, wb, start):
    """Smallest index >= start at which the two box sweeps overlap, else -1.

    The pose arrays must have equal length; a cheap bounding-circle check
    prunes most steps before the full axis test runs.
    """
    xa = list(xa)
    ya = list(ya)
    ha = list(ha)
    xb = list(xb)
    yb = list(yb)
    hb = list(hb)
    n = len(xa)
    reach = 0.5 * hypot(la, wa) + 0.5 * hypot(lb, wb)
    reach_sq = reach * reach
    for i in range(start, n):
        dx = xb[i] - xa[i]
        dy = yb[i] - ya[i]
        if dx * dx + dy * dy > reach_sq:
            continue
        if obb_overlap(xa[i], ya[i], ha[i], la, wa, xb[i], yb[i], hb[i], lb, wb):
            return i
    return -1
