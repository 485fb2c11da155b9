"""Planar primitives: disk inversion, closed curves, curvature, resampling.

Curves are stored as plain node polylines (CCW, periodic indexing).  A
periodic cubic interpolant through the nodes is used only where a smooth
representation is needed (curvature-free resampling, polygon refinement);
the node list stays the single source of truth.
"""

import numpy as np
from scipy.interpolate import CubicSpline


class GeometryError(ValueError):
    """Degenerate or invalid geometric input."""


class DiskDomain:
    """The circular fluid domain: center `c` and radius `R > 0`."""

    __slots__ = ("center", "radius")

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        center = np.asarray(center, dtype=float)
        if center.shape != (2,) or not np.all(np.isfinite(center)):
            raise GeometryError("disk center must be a finite 2-vector")
        if not (np.isfinite(radius) and radius > 0.0):
            raise GeometryError("disk radius must be positive")
        self.center = center
        self.radius = float(radius)

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        r = np.hypot(*(p - self.center).T if p.ndim > 1 else (p - self.center))
        return r <= self.radius + tol

    def boundary_point(self, angle):
        return self.center + self.radius * np.array([np.cos(angle), np.sin(angle)])

    def __repr__(self):
        return f"DiskDomain(center=({self.center[0]}, {self.center[1]}), radius={self.radius})"

    def __eq__(self, other):
        return (isinstance(other, DiskDomain)
                and np.array_equal(self.center, other.center)
                and self.radius == other.radius)


def invert_point(p, disk):
    """Reflect `p` over the disk boundary: p* = c + R^2 (p-c)/|p-c|^2.

    An involution; boundary points are fixed.  Rejects the disk center.
    """
    p = np.asarray(p, dtype=float)
    d = p - disk.center
    r2 = np.einsum("...i,...i->...", d, d)
    if np.any(r2 == 0.0):
        raise GeometryError("cannot invert the disk center")
    return disk.center + (disk.radius ** 2) * d / r2[..., None] if p.ndim > 1 else (
        disk.center + (disk.radius ** 2) * d / r2)


def _check_nodes(nodes):
    nodes = np.ascontiguousarray(np.asarray(nodes, dtype=float))
    if nodes.ndim != 2 or nodes.shape[1] != 2:
        raise GeometryError("nodes must have shape (N, 2)")
    if nodes.shape[0] < 8:
        raise GeometryError(f"need at least 8 nodes, got {nodes.shape[0]}")
    if not np.all(np.isfinite(nodes)):
        raise GeometryError("nodes contain non-finite values")
    gaps = np.hypot(*np.diff(nodes, axis=0, append=nodes[:1]).T)
    if np.any(gaps == 0.0):
        raise GeometryError("duplicate adjacent nodes")
    return nodes


class ClosedCurve:
    """A patch boundary: ordered node list, periodic, counter-clockwise."""

    __slots__ = ("nodes",)

    def __init__(self, nodes, check_orientation=True):
        nodes = _check_nodes(nodes)
        if check_orientation and _shoelace(nodes) <= 0.0:
            raise GeometryError("curve must be counter-clockwise (signed area > 0)")
        self.nodes = nodes
        self.nodes.setflags(write=False)

    @property
    def n(self):
        return self.nodes.shape[0]

    def signed_area(self):
        return _shoelace(self.nodes)

    def chord_lengths(self):
        return np.hypot(*np.diff(self.nodes, axis=0, append=self.nodes[:1]).T)

    def perimeter(self):
        return float(self.chord_lengths().sum())

    def tangents(self):
        """Unit tangents at nodes from centered differences of neighbours."""
        d = np.roll(self.nodes, -1, axis=0) - np.roll(self.nodes, 1, axis=0)
        return d / np.hypot(d[:, 0], d[:, 1])[:, None]

    def inward_normals(self):
        """Left of travel; for a CCW curve this points into the patch."""
        t = self.tangents()
        return np.stack([-t[:, 1], t[:, 0]], axis=1)

    def contains(self, points):
        from ._compiled import winding_inside
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return winding_inside(np.ascontiguousarray(points), self.nodes)

    def refined_polygon(self, refinement):
        """Vertices of the evaluation polygon at the given refinement.

        refinement 1 returns the nodes themselves; r > 1 inserts r-1 extra
        vertices per node interval sampled from the periodic cubic
        interpolant, so the polygon converges to the smooth curve as O(h^2/r^2).
        """
        if refinement <= 1:
            return self.nodes
        s, spl, total = _periodic_spline(self.nodes)
        r = int(refinement)
        frac = np.arange(r) / r
        svals = (s[:, None] + np.diff(np.append(s, total))[:, None] * frac[None, :]).ravel()
        return spl(svals)

    def reversed(self):
        rev = self.nodes[::-1].copy()
        return ClosedCurve(rev, check_orientation=False)

    def __repr__(self):
        return f"ClosedCurve(n={self.n}, area={self.signed_area():.6g})"


def _shoelace(nodes):
    x, y = nodes[:, 0], nodes[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def signed_area(curve):
    """Shoelace area of the node polygon; positive for CCW."""
    return _shoelace(np.asarray(curve.nodes if isinstance(curve, ClosedCurve) else curve, dtype=float))


def _periodic_spline(nodes):
    """Periodic cubic interpolant parametrized by cumulative chord length."""
    closed = np.vstack([nodes, nodes[:1]])
    gaps = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(gaps)])
    spl = CubicSpline(s, closed, bc_type="periodic")
    return s[:-1], spl, s[-1]


def _spline_arclength_table(spl, total, samples_per_unit=None, n_dense=None):
    # dense trapezoid table of |dz/ds|; accurate enough to place nodes to ~1e-12
    if n_dense is None:
        n_dense = max(4096, 32 * (len(spl.x) - 1))
    sd = np.linspace(0.0, total, n_dense + 1)
    dz = spl(sd, 1)
    speed = np.hypot(dz[:, 0], dz[:, 1])
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(sd))])
    return sd, arc


def resample_constant_speed(curve, n):
    """Redistribute `n` nodes uniformly in arclength of the interpolated curve.

    Node 0 is kept as the anchor, so an already-uniform curve maps to itself.
    """
    if n < 8:
        raise GeometryError(f"resolution too low: n={n} < 8")
    s, spl, total = _periodic_spline(curve.nodes)
    sd, arc = _spline_arclength_table(spl, total)
    L = arc[-1]
    targets = L * np.arange(n) / n
    svals = np.interp(targets, arc, sd)
    # one Newton pass sharpens the table inversion
    dz = spl(svals, 1)
    speed = np.hypot(dz[:, 0], dz[:, 1])
    cur = np.interp(svals, sd, arc)
    svals = svals - (cur - targets) / speed
    out = spl(np.clip(svals, 0.0, total))
    return ClosedCurve(out, check_orientation=False)


def curvature(curve):
    """Signed curvature per node from a local parabola fit through neighbours.

    Positive for a CCW-traversed convex boundary; exact O(h^2) on circles.
    """
    p = curve.nodes
    pm = np.roll(p, 1, axis=0)
    pp = np.roll(p, -1, axis=0)
    chord = pp - pm
    clen = np.hypot(chord[:, 0], chord[:, 1])
    if np.any(clen == 0.0):
        raise GeometryError("degenerate geometry: coincident neighbour nodes")
    d = chord / clen[:, None]
    nrm = np.stack([-d[:, 1], d[:, 0]], axis=1)
    # local frame at node i: xi along the neighbour chord, eta along its left normal
    xm = np.einsum("ij,ij->i", pm - p, d)
    em = np.einsum("ij,ij->i", pm - p, nrm)
    xp = np.einsum("ij,ij->i", pp - p, d)
    ep = np.einsum("ij,ij->i", pp - p, nrm)
    denom = xp - xm
    alpha = (ep / xp - em / xm) / denom
    beta = (ep * xm / xp - em * xp / xm) / (xm - xp)
    return 2.0 * alpha / (1.0 + beta ** 2) ** 1.5


def min_distance(a, b):
    """Minimum distance between two closed polylines (segment to segment)."""
    from ._compiled import polyline_min_distance
    return float(polyline_min_distance(a.nodes, b.nodes))


def curve_is_simple(curve):
    """True if no two non-adjacent segments of the polygon intersect."""
    from ._compiled import has_self_intersection
    return not has_self_intersection(curve.nodes)


def hausdorff_distance(a, b, oversample=8):
    """Symmetric Hausdorff distance between two closed polylines.

    Sample points of each (refined) polygon are measured against the other
    polygon's segments.
    """
    from ._compiled import points_to_polyline_distance
    pa = a.refined_polygon(oversample) if isinstance(a, ClosedCurve) else np.asarray(a, float)
    pb = b.refined_polygon(oversample) if isinstance(b, ClosedCurve) else np.asarray(b, float)
    na = b.nodes if isinstance(b, ClosedCurve) else np.asarray(b, float)
    nb = a.nodes if isinstance(a, ClosedCurve) else np.asarray(a, float)
    d_ab = points_to_polyline_distance(np.ascontiguousarray(pa), na).max()
    d_ba = points_to_polyline_distance(np.ascontiguousarray(pb), nb).max()
    return float(max(d_ab, d_ba))


def circle_nodes(center, radius, n, phase=0.0):
    """Helper: n CCW nodes on a circle."""
    th = phase + 2.0 * np.pi * np.arange(n) / n
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1)


def ellipse_nodes(center, a, b, n, angle=0.0):
    """Helper: n CCW nodes on an ellipse, uniform in the parametric angle."""
    th = 2.0 * np.pi * np.arange(n) / n
    x = a * np.cos(th)
    y = b * np.sin(th)
    ca, sa = np.cos(angle), np.sin(angle)
    return np.stack([center[0] + ca * x - sa * y, center[1] + sa * x + ca * y], axis=1)
