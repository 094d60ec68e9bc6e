"""Hand-emitted SVG output: deformed-configuration mesh plots, ratio
curves and interface-iteration overlays. Only polylines, axes and text,
so the artifact carries no plotting dependency."""

from xml.sax.saxutils import escape

import numpy as np

STATUS_COLORS = {"contact": "#d62728", "cohesive": "#ff9f1c", "open": "#1f77b4"}
CURVE_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff9f1c",
                "#17becf", "#7f7f7f"]


class SvgCanvas:
    """Minimal SVG builder mapping data coordinates to pixel space."""

    def __init__(self, width, height, xlim, ylim, margin=50):
        self.width = width
        self.height = height
        self.xlim = xlim
        self.ylim = ylim
        self.margin = margin
        self.parts = []

    def x(self, xd):
        x0, x1 = self.xlim
        return self.margin + (xd - x0) / (x1 - x0) * (self.width - 2 * self.margin)

    def y(self, yd):
        y0, y1 = self.ylim
        return self.height - self.margin - (yd - y0) / (y1 - y0) * (self.height - 2 * self.margin)

    def polyline(self, xs, ys, color="#000", width=1.0, dash=None, opacity=1.0):
        pts = " ".join("%.2f,%.2f" % (self.x(px), self.y(py))
                       for px, py in zip(xs, ys))
        extra = ' stroke-dasharray="%s"' % dash if dash else ""
        self.parts.append(
            '<polyline points="%s" fill="none" stroke="%s" stroke-width="%.2f"'
            ' stroke-opacity="%.3f"%s/>' % (pts, color, width, opacity, extra))

    def segments(self, a, b, color="#000", width=1.0, opacity=1.0):
        """Batch of line segments, a/b arrays of endpoints (n, 2)."""
        chunks = []
        for (xa, ya), (xb, yb) in zip(a, b):
            chunks.append('M%.2f %.2fL%.2f %.2f' % (
                self.x(xa), self.y(ya), self.x(xb), self.y(yb)))
        self.parts.append(
            '<path d="%s" fill="none" stroke="%s" stroke-width="%.2f"'
            ' stroke-opacity="%.3f"/>' % ("".join(chunks), color, width, opacity))

    def text(self, xd, yd, s, size=12, color="#000", anchor="start"):
        self.parts.append(
            '<text x="%.2f" y="%.2f" font-size="%d" fill="%s" text-anchor="%s"'
            ' font-family="sans-serif">%s</text>'
            % (self.x(xd), self.y(yd), size, color, anchor, escape(s)))

    def axes(self, xlabel="", ylabel="", n_ticks=5):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        self.polyline([x0, x1], [y0, y0], color="#333", width=1.2)
        self.polyline([x0, x0], [y0, y1], color="#333", width=1.2)
        for t in np.linspace(x0, x1, n_ticks):
            self.parts.append('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#333"/>'
                              % (self.x(t), self.y(y0), self.x(t), self.y(y0) + 4))
            self.text(t, y0 - 0.06 * (y1 - y0), "%.3g" % t, size=10, anchor="middle")
        for t in np.linspace(y0, y1, n_ticks):
            self.parts.append('<line x1="%.2f" y1="%.2f" x2="%.2f" y2="%.2f" stroke="#333"/>'
                              % (self.x(x0) - 4, self.y(t), self.x(x0), self.y(t)))
            self.text(x0 - 0.02 * (x1 - x0), t, "%.3g" % t, size=10, anchor="end")
        if xlabel:
            self.text(0.5 * (x0 + x1), y0 - 0.12 * (y1 - y0), xlabel, anchor="middle")
        if ylabel:
            self.text(x0, y1 + 0.03 * (y1 - y0), ylabel)

    def tostring(self):
        return ('<?xml version="1.0" encoding="UTF-8"?>\n'
                '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
                'viewBox="0 0 %d %d">\n<rect width="100%%" height="100%%" fill="white"/>\n'
                % (self.width, self.height, self.width, self.height)
                + "\n".join(self.parts) + "\n</svg>\n")

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.tostring())


def _triangle_edges(mesh):
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def deformed_configuration(path, mesh, field, statuses):
    """Current-configuration plot x + u(x) with interface edges coloured by
    contact status (red contact, orange cohesive, blue open)."""
    pos = mesh.vertices + field.as_points()
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    pad = 0.05 * max(hi - lo)
    canvas = SvgCanvas(900, 560, (lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad))
    edges = _triangle_edges(mesh)
    canvas.segments(pos[edges[:, 0]], pos[edges[:, 1]], color="#bbbbbb", width=0.4)
    for side in (mesh.pair_minus, mesh.pair_plus):
        for k, (a, b) in enumerate(side):
            st = min(statuses[k], statuses[k + 1],
                     key=lambda s: ("contact", "cohesive", "open").index(s))
            canvas.segments(pos[[a]], pos[[b]], color=STATUS_COLORS[st], width=2.0)
    for i, (name, col) in enumerate(STATUS_COLORS.items()):
        yl = lo[1] - pad + 0.035 * (hi[1] - lo[1] + 2 * pad) * (i + 1)
        canvas.polyline([lo[0], lo[0] + 0.04], [yl, yl], color=col, width=3)
        canvas.text(lo[0] + 0.05, yl, name, size=11, color=col)
    canvas.write(path)


def ratio_curves(path, ns, j_ratio, err_ratio):
    """Objective and shape-error ratio curves versus iteration."""
    ymax = max(1.05, 1.05 * max(np.max(j_ratio), np.max(err_ratio)))
    canvas = SvgCanvas(820, 520, (0, max(ns[-1], 1)), (0.0, ymax))
    canvas.axes(xlabel="iteration n", ylabel="ratio")
    canvas.polyline(ns, j_ratio, color=CURVE_COLORS[0], width=1.8)
    canvas.polyline(ns, err_ratio, color=CURVE_COLORS[1], width=1.8)
    canvas.text(0.62 * ns[-1], 0.96 * ymax,
                "objective ratio (min %.3g)" % float(np.min(j_ratio)),
                color=CURVE_COLORS[0], size=12)
    canvas.text(0.62 * ns[-1], 0.90 * ymax,
                "shape error ratio (min %.3g)" % float(np.min(err_ratio)),
                color=CURVE_COLORS[1], size=12)
    canvas.write(path)


def interface_overlay(path, snapshots, psi_true, picks=(0, 10, 20, 40, 100, 200)):
    """Selected interface iterates over the true breaking line."""
    canvas = SvgCanvas(900, 560, (0.0, 1.0), (0.0, 0.5))
    canvas.axes(xlabel="x1", ylabel="x2")
    xx = np.linspace(0.0, 1.0, 400)
    canvas.polyline(xx, psi_true(xx), color="#000", width=3.0)
    canvas.text(0.02, 0.47, "true interface", size=12)
    shown = 0
    for i, n in enumerate(picks):
        if n not in snapshots:
            continue
        col = CURVE_COLORS[(i + 2) % len(CURVE_COLORS)]
        canvas.polyline(xx, snapshots[n](xx), color=col, width=1.4)
        canvas.text(0.02, 0.44 - 0.025 * shown, "n = %d" % n, size=11, color=col)
        shown += 1
    canvas.write(path)
    return shown
