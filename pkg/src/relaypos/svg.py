"""SVG drawing of a scenario and a placement result.

The figure shows the convex hull of the source and destinations, the source
hyperarc disk around ``s``, the relay hyperarc disk around the relay and the
relay itself.  Plain string assembly keeps this free of plotting libraries.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .geometry import Point, convex_hull
from .records import ResultRecord, scenario_from_dict

SIZE = 480
MARGIN = 40


class _Frame:
    """Maps plane coordinates onto the square canvas with the y axis pointing up."""

    def __init__(self, points, radii_at):
        pts = np.asarray(points, dtype=float)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        for c, r in radii_at:
            lo = np.minimum(lo, np.asarray(c) - r)
            hi = np.maximum(hi, np.asarray(c) + r)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        self.lo, self.hi = lo, hi
        self.scale = (SIZE - 2 * MARGIN) / span

    def xy(self, p):
        x = MARGIN + (p[0] - self.lo[0]) * self.scale
        y = SIZE - MARGIN - (p[1] - self.lo[1]) * self.scale
        return f"{x:.3f}", f"{y:.3f}"

    def r(self, radius):
        return f"{radius * self.scale:.3f}"


def _dominant_path(record: ResultRecord):
    """Reaches of the relay path carrying the most flow, if any."""
    best = {}
    for row in record.powers:
        best.setdefault(row["path"], {})[row["transmitter"]] = row
    chosen, flow = None, -1.0
    for label, hops in best.items():
        if "r" in hops and hops["r"]["rate"] > flow:
            chosen, flow = hops, hops["r"]["rate"]
    if chosen is None:
        return None, None
    return chosen["s"]["reach"], chosen["r"]["reach"]


def render_svg(record: ResultRecord) -> str:
    sc = scenario_from_dict(record.scenario)
    nodes = sc.nodes_array()
    relay = record.relay
    if relay is None and sc.relay is not None:
        relay = list(sc.relay)
    src_reach, rel_reach = _dominant_path(record)
    if src_reach is None and record.details.get("source_reach") is not None:
        src_reach = record.details.get("source_reach")
        rel_reach = record.details.get("relay_reach")
    circles = []
    if src_reach:
        circles.append((sc.source_array, float(src_reach)))
    if relay is not None and rel_reach:
        circles.append((np.asarray(relay, dtype=float), float(rel_reach)))
    pts = nodes if relay is None else np.vstack([nodes, [relay]])
    fr = _Frame(pts, circles)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{escape(record.command)} {escape(str(record.branch or ''))}</title>",
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    hull = convex_hull([Point(*p) for p in nodes])
    poly = " ".join(",".join(fr.xy(v)) for v in hull.as_array())
    out.append(f'<polygon id="hull" points="{poly}" fill="#eef3fb" stroke="#5b7db1" stroke-width="1"/>')
    names = ("source-disk", "relay-disk")
    colors = ("#c0392b", "#27ae60")
    for name, color, (c, r) in zip(names, colors, circles):
        cx, cy = fr.xy(c)
        out.append(
            f'<circle id="{name}" cx="{cx}" cy="{cy}" r="{fr.r(r)}" fill="none" '
            f'stroke="{color}" stroke-dasharray="5,3" stroke-width="1.2"/>'
        )
    cx, cy = fr.xy(sc.source_array)
    out.append(f'<rect id="source" x="{float(cx) - 5:.3f}" y="{float(cy) - 5:.3f}" width="10" height="10" fill="#c0392b"/>')
    out.append(f'<text x="{float(cx) + 7:.3f}" y="{float(cy) - 7:.3f}" font-size="12">s</text>')
    for i, t in enumerate(sc.destinations, start=1):
        tx, ty = fr.xy(tuple(t))
        out.append(f'<circle class="destination" cx="{tx}" cy="{ty}" r="4" fill="#2c3e50"/>')
        out.append(f'<text x="{float(tx) + 6:.3f}" y="{float(ty) - 6:.3f}" font-size="12">t{i}</text>')
    if relay is not None:
        rx, ry = fr.xy(relay)
        rxf, ryf = float(rx), float(ry)
        out.append(
            f'<polygon id="relay" points="{rxf:.3f},{ryf - 7:.3f} {rxf + 7:.3f},{ryf:.3f} '
            f'{rxf:.3f},{ryf + 7:.3f} {rxf - 7:.3f},{ryf:.3f}" fill="#27ae60"/>'
        )
        out.append(f'<text x="{rxf + 8:.3f}" y="{ryf + 14:.3f}" font-size="12">r</text>')
    if record.objective is not None:
        out.append(
            f'<text x="{MARGIN}" y="{MARGIN - 16}" font-size="12">'
            f"{escape(record.command)}: objective {record.objective:.6g}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
