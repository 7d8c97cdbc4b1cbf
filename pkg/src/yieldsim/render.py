"""SVG rendering of episode traces: one frame per simulation step."""
from __future__ import annotations

import math
from pathlib import Path
from typing import List

__all__ = ["render_frames", "write_frames"]

_EGO_COLOR = "#2a9d2a"
_RELEVANT_COLOR = "#e07b00"
_AGENT_COLOR = "#4477cc"
_MAP_COLOR = "#bbbbbb"


def _corners(x: float, y: float, heading: float, length: float, width: float):
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    return [
        (x + c * dx - s * dy, y + s * dx + c * dy)
        for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
    ]


def _bounds(trace: dict):
    xs, ys = [], []
    for states in trace["executed"].values():
        xs.extend(s["x"] for s in states)
        ys.extend(s["y"] for s in states)
    for pl in trace.get("map", []):
        xs.extend(p[0] for p in pl["points"])
        ys.extend(p[1] for p in pl["points"])
    if not xs:
        xs, ys = [0.0], [0.0]
    pad = 10.0
    return min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad


def _frame_svg(trace: dict, step: int, bounds) -> str:
    x0, y0, x1, y1 = bounds
    w, h = x1 - x0, y1 - y0
    scale = 900.0 / max(w, h)
    width_px, height_px = w * scale, h * scale

    def tx(x: float) -> float:
        return (x - x0) * scale

    def ty(y: float) -> float:
        return height_px - (y - y0) * scale  # SVG y runs downward

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0f}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px:.2f} {height_px:.2f}">',
        f'<rect width="100%" height="100%" fill="white"/>',
        f'<text x="8" y="18" font-family="monospace" font-size="14">'
        f'{trace["scenario_id"]} policy={trace["policy"]} step={step}</text>',
    ]
    for pl in trace.get("map", []):
        pts = " ".join(f"{tx(p[0]):.2f},{ty(p[1]):.2f}" for p in pl["points"])
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{_MAP_COLOR}" '
            f'stroke-width="1.5" stroke-dasharray="6 4"/>'
        )
    futures = (
        trace["futures_per_step"][step]
        if step < len(trace.get("futures_per_step", []))
        else {}
    )
    relevant = set(trace.get("relevant", []))
    for aid, states in sorted(trace["executed"].items()):
        if aid == trace["ego_id"]:
            color = _EGO_COLOR
        elif aid in relevant:
            color = _RELEVANT_COLOR
        else:
            color = _AGENT_COLOR
        for px, py in futures.get(aid, []):
            parts.append(
                f'<circle cx="{tx(px):.2f}" cy="{ty(py):.2f}" r="2" '
                f'fill="{color}" fill-opacity="0.5"/>'
            )
        s = states[step]
        dims = trace["agents"][aid]
        corners = _corners(s["x"], s["y"], s["heading"], dims["length"], dims["width"])
        pts = " ".join(f"{tx(cx):.2f},{ty(cy):.2f}" for cx, cy in corners)
        stroke = "3" if aid in relevant else "1.5"
        parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="0.35" '
            f'stroke="{color}" stroke-width="{stroke}"/>'
        )
        parts.append(
            f'<text x="{tx(s["x"]):.2f}" y="{ty(s["y"]):.2f}" '
            f'font-family="monospace" font-size="10">{aid}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def render_frames(trace: dict) -> List[str]:
    """One SVG document per executed step."""
    if "executed" not in trace or not trace["executed"]:
        raise ValueError("trace has no executed trajectories")
    n_steps = min(len(states) for states in trace["executed"].values())
    bounds = _bounds(trace)
    return [_frame_svg(trace, k, bounds) for k in range(n_steps)]


def write_frames(trace: dict, out_dir) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, svg in enumerate(render_frames(trace)):
        path = out / f"frame_{k:03d}.svg"
        path.write_text(svg, encoding="utf-8")
        paths.append(path)
    return paths
