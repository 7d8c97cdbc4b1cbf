"""Oriented-box overlap tests, swept-trajectory collision search, and path
cross-point computation.

All functions are pure; trajectories are compared at their sampled steps
only (no continuous-time sweep between steps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from ._kernels import BACKEND as KERNEL_BACKEND
from ._kernels import first_overlap_index, obb_overlap, sat_margin

__all__ = [
    "KERNEL_BACKEND",
    "PathPoint",
    "OrientedBox",
    "CrossKind",
    "CrossPoint",
    "boxes_overlap",
    "separation_margin",
    "first_collision_step",
    "cross_point",
    "arrival_index",
    "overlap_centroid",
]

Dims = Tuple[float, float]  # (length, width) in meters


@dataclass(frozen=True)
class PathPoint:
    x: float
    y: float


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle footprint: center pose plus extents.

    `heading` is radians CCW from +x; `length` runs along the heading.
    """

    center_x: float
    center_y: float
    heading: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0.0 and self.width > 0.0):
            raise ValueError("box extents must be positive")
        if not all(
            math.isfinite(v)
            for v in (self.center_x, self.center_y, self.heading)
        ):
            raise ValueError("box pose must be finite")

    def corners(self) -> np.ndarray:
        """Corner coordinates as a (4, 2) array, counter-clockwise."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = np.array([(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.center_x, self.center_y])


class CrossKind(str, Enum):
    PATH_CROSSING = "path-crossing"
    SAME_LANE_COLLISION = "same-lane-collision"


@dataclass(frozen=True)
class CrossPoint:
    """Where two agents' paths meet, with each agent's arrival step index."""

    point: PathPoint
    index_a: int
    index_b: int
    kind: CrossKind


def boxes_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the closed rectangles intersect; touching counts as overlap."""
    return bool(
        obb_overlap(
            a.center_x, a.center_y, a.heading, a.length, a.width,
            b.center_x, b.center_y, b.heading, b.length, b.width,
        )
    )


def separation_margin(a: OrientedBox, b: OrientedBox) -> float:
    """Signed largest face-axis gap: positive separation, negative penetration."""
    return float(
        sat_margin(
            a.center_x, a.center_y, a.heading, a.length, a.width,
            b.center_x, b.center_y, b.heading, b.length, b.width,
        )
    )


def _pose_arrays(traj) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Extract contiguous (x, y, heading) arrays from a trajectory-like object."""
    xyh = getattr(traj, "xyh", None)
    if callable(xyh):
        arr = xyh()
    else:
        states = getattr(traj, "states", traj)
        arr = np.array([(s.x, s.y, s.heading) for s in states], dtype=np.float64)
    if arr.size == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty, empty
    return (
        np.ascontiguousarray(arr[:, 0]),
        np.ascontiguousarray(arr[:, 1]),
        np.ascontiguousarray(arr[:, 2]),
    )


def first_collision_step(
    traj_a,
    traj_b,
    dims_a: Dims,
    dims_b: Dims,
    from_step: int = 0,
) -> Optional[int]:
    """Smallest step index >= from_step at which the agents' boxes overlap.

    Both trajectories must be sampled on the same step grid and have equal
    length. Returns None when the sweeps never overlap.
    """
    xa, ya, ha = _pose_arrays(traj_a)
    xb, yb, hb = _pose_arrays(traj_b)
    if len(xa) != len(xb):
        raise ValueError(
            f"trajectory lengths differ: {len(xa)} vs {len(xb)}"
        )
    n = len(xa)
    if from_step < 0 or from_step > n:
        raise ValueError(f"from_step {from_step} outside [0, {n}]")
    la, wa = dims_a
    lb, wb = dims_b
    idx = first_overlap_index(xa, ya, ha, xb, yb, hb, la, wa, lb, wb, from_step)
    return None if idx < 0 else int(idx)


def _segment_crossing(p1, p2, p3, p4) -> Optional[Tuple[float, float]]:
    """Transversal intersection point of segments [p1,p2] and [p3,p4].

    Collinear (same-line) overlap is deliberately not a crossing: agents
    sharing a lane must fall through to the collision-point branch.
    Endpoint touches do count.
    """
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = p4[0] - p3[0], p4[1] - p3[1]
    denom = rx * sy - ry * sx
    scale = max(abs(rx) + abs(ry), abs(sx) + abs(sy), 1e-12)
    if abs(denom) <= 1e-12 * scale * scale:
        return None
    qx, qy = p3[0] - p1[0], p3[1] - p1[1]
    t = (qx * sy - qy * sx) / denom
    u = (qx * ry - qy * rx) / denom
    eps = 1e-9
    if -eps <= t <= 1.0 + eps and -eps <= u <= 1.0 + eps:
        return (p1[0] + t * rx, p1[1] + t * ry)
    return None


def arrival_index(
    xs: Sequence[float],
    ys: Sequence[float],
    px: float,
    py: float,
    half_length: float = 0.0,
) -> Optional[int]:
    """First step at which a position passes within one step-displacement
    (or the agent's half length, whichever is larger) of the point."""
    n = len(xs)
    for k in range(n):
        if k + 1 < n:
            disp = math.hypot(xs[k + 1] - xs[k], ys[k + 1] - ys[k])
        elif n >= 2:
            disp = math.hypot(xs[-1] - xs[-2], ys[-1] - ys[-2])
        else:
            disp = 0.0
        thresh = max(disp, half_length) + 1e-9
        if math.hypot(px - xs[k], py - ys[k]) <= thresh:
            return k
    return None


def cross_point(
    traj_a,
    traj_b,
    dims_a: Optional[Dims] = None,
    dims_b: Optional[Dims] = None,
) -> Optional[CrossPoint]:
    """First meeting point of two agents' paths.

    If the center polylines intersect transversally, that intersection is
    returned (kind=path-crossing) with each agent's arrival step index.
    Otherwise, when box dims are given and the box sweeps collide
    (rear-end / same-lane geometry), the midpoint between the two centers
    at the collision step is returned (kind=same-lane-collision).
    """
    xa, ya, _ = _pose_arrays(traj_a)
    xb, yb, _ = _pose_arrays(traj_b)
    if len(xa) == 0 or len(xb) == 0:
        raise ValueError("trajectories must be nonempty")

    half_a = 0.5 * dims_a[0] if dims_a else 0.0
    half_b = 0.5 * dims_b[0] if dims_b else 0.0

    for i in range(len(xa) - 1):
        for j in range(len(xb) - 1):
            hit = _segment_crossing(
                (xa[i], ya[i]), (xa[i + 1], ya[i + 1]),
                (xb[j], yb[j]), (xb[j + 1], yb[j + 1]),
            )
            if hit is None:
                continue
            px, py = float(hit[0]), float(hit[1])
            ia = arrival_index(xa, ya, px, py, half_a)
            ib = arrival_index(xb, yb, px, py, half_b)
            # The crossing lies on both polylines, so both arrive.
            ia = i if ia is None else ia
            ib = j if ib is None else ib
            return CrossPoint(PathPoint(px, py), ia, ib, CrossKind.PATH_CROSSING)

    if dims_a is None or dims_b is None:
        return None
    step = first_collision_step(traj_a, traj_b, dims_a, dims_b, 0)
    if step is None:
        return None
    px = float(0.5 * (xa[step] + xb[step]))
    py = float(0.5 * (ya[step] + yb[step]))
    ia = arrival_index(xa, ya, px, py, half_a)
    ib = arrival_index(xb, yb, px, py, half_b)
    ia = step if ia is None or ia > step else ia
    ib = step if ib is None or ib > step else ib
    return CrossPoint(PathPoint(px, py), ia, ib, CrossKind.SAME_LANE_COLLISION)


def _clip_polygon(poly: np.ndarray, edge_p: np.ndarray, edge_d: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon against one half-plane."""
    def side(point):
        return edge_d[0] * (point[1] - edge_p[1]) - edge_d[1] * (point[0] - edge_p[0])

    out = []
    n = len(poly)
    for k in range(n):
        cur, nxt = poly[k], poly[(k + 1) % n]
        side_cur = side(cur)
        side_nxt = side(nxt)
        if side_cur >= -1e-12:
            out.append(cur)
        if (side_cur > 1e-12 and side_nxt < -1e-12) or (
            side_cur < -1e-12 and side_nxt > 1e-12
        ):
            t = side_cur / (side_cur - side_nxt)
            out.append(cur + t * (nxt - cur))
    return np.array(out) if out else np.empty((0, 2))


def overlap_centroid(a: OrientedBox, b: OrientedBox) -> Optional[PathPoint]:
    """Centroid of the intersection region of two boxes.

    Falls back to the midpoint between centers when the intersection is
    degenerate (touching edges or numerically empty).
    """
    poly = a.corners()
    cb = b.corners()
    for k in range(4):
        poly = _clip_polygon(poly, cb[k], cb[(k + 1) % 4] - cb[k])
        if len(poly) == 0:
            break
    if len(poly) >= 3:
        x = poly[:, 0]
        y = poly[:, 1]
        xr = np.roll(x, -1)
        yr = np.roll(y, -1)
        cross = x * yr - xr * y
        area = 0.5 * np.sum(cross)
        if abs(area) > 1e-12:
            cx = np.sum((x + xr) * cross) / (6.0 * area)
            cy = np.sum((y + yr) * cross) / (6.0 * area)
            return PathPoint(float(cx), float(cy))
    if boxes_overlap(a, b):
        return PathPoint(
            0.5 * (a.center_x + b.center_x), 0.5 * (a.center_y + b.center_y)
        )
    return None
