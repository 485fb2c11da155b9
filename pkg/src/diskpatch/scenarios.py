"""Initial-data generators: single ellipse patch, symmetric pair, and the
boundary-strip example that drives small-scale formation at the disk bottom.

Tangent fields come from analytic level-set functions, so every generated
state satisfies the tangency invariant by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import SimState, TangentField, _mirror_nodes, _mirror_w
from .geometry import ClosedCurve, DiskDomain, GeometryError, ellipse_nodes
from .kernel import Patch, PatchSet


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str                       # single_patch | symmetric_pair | ks_example
    n: int = 512
    disk: DiskDomain = field(default_factory=DiskDomain)
    # ellipse parameters (single_patch; base patch of symmetric_pair)
    center: tuple = (0.0, 0.0)
    axes: tuple = (0.5, 0.5)
    angle: float = 0.0
    # strip example parameters
    strip_halfwidth: float = 0.05
    rounding_radius: float = 0.0125
    cone_angle: float = np.pi / 10
    epsilon: float = 0.05

    def __post_init__(self):
        if self.kind not in ("single_patch", "symmetric_pair", "ks_example"):
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.n < 8:
            raise ScenarioError("node count must be at least 8")


def _ellipse_levelset_w(nodes, center, axes, angle):
    # phi0 = 1 - (x-c)^T Q (x-c), w0 = perp-grad of phi0 = (d2 phi, -d1 phi)
    a, b = axes
    ca, sa = np.cos(angle), np.sin(angle)
    rot = np.array([[ca, -sa], [sa, ca]])
    Q = rot @ np.diag([1.0 / a ** 2, 1.0 / b ** 2]) @ rot.T
    g = -2.0 * (nodes - np.asarray(center)) @ Q.T
    return np.stack([g[:, 1], -g[:, 0]], axis=1)


def make_single_patch(spec):
    """Ellipse patch with the quadratic level-set tangent field."""
    a, b = spec.axes
    if not (a > 0 and b > 0):
        raise ScenarioError("ellipse axes must be positive")
    nodes = ellipse_nodes(spec.center, a, b, spec.n, spec.angle)
    r = np.hypot(*(nodes - spec.disk.center).T)
    if r.max() > spec.disk.radius * (1.0 + 1e-12):
        raise ScenarioError("patch is not contained in the disk")
    curve = ClosedCurve(nodes)
    w = _ellipse_levelset_w(nodes, spec.center, spec.axes, spec.angle)
    ps = PatchSet(spec.disk, [(1.0, curve)])
    return ps, TangentField([w])


def make_symmetric_pair(spec):
    """Mirror pair with strengths (+1, -1) about the axis x1 = 0."""
    if abs(spec.disk.center[0]) != 0.0:
        raise ScenarioError("symmetric pair needs the disk centered on x1 = 0")
    ps1, w1 = make_single_patch(spec)
    base = ps1.patches[0].boundary
    if base.nodes[:, 0].min() <= 0.0:
        raise ScenarioError("base patch must lie strictly in the right half-disk")
    nodes2 = _mirror_nodes(base.nodes)
    w2 = _mirror_w(w1.per_patch[0])
    ps = PatchSet(spec.disk, [(1.0, base), (-1.0, ClosedCurve(nodes2))])
    return ps, TangentField([w1.per_patch[0], w2])


def _ks_pieces(disk, s, rho):
    """Analytic pieces of the rounded strip patch: (kind, params, length).

    CCW order: disk arc, top fillet, chord (downward), bottom fillet.
    """
    c, R = disk.center, disk.radius
    q = np.sqrt((R - rho) ** 2 - (s + rho) ** 2)
    phi_b = np.arctan2(-q, s + rho)          # in (-pi/2, 0)
    phi_t = -phi_b
    fb = np.array([s + rho, c[1] - q])
    ft = np.array([s + rho, c[1] + q])
    chord_top = np.array([s, ft[1]])
    chord_bot = np.array([s, fb[1]])
    arc_len = R * (phi_t - phi_b)
    fil_len = rho * (np.pi + phi_b)
    chord_len = ft[1] - fb[1]
    pieces = [
        ("disk_arc", (c, R, phi_b, phi_t), arc_len),
        ("fillet", (ft, rho, phi_t, np.pi), fil_len),
        ("chord", (chord_top, chord_bot), chord_len),
        ("fillet", (fb, rho, np.pi, 2.0 * np.pi + phi_b), fil_len),
    ]
    return pieces


def _piece_point(piece, u):
    """Point and unit tangent at arclength fraction u in [0, 1) of a piece."""
    kind, params = piece[0], piece[1]
    if kind == "chord":
        top, bot = params
        p = top + u * (bot - top)
        t = (bot - top) / np.hypot(*(bot - top))
        return p, t
    center, r, a0, a1 = params
    ang = a0 + u * (a1 - a0)
    rad = np.array([np.cos(ang), np.sin(ang)])
    p = np.asarray(center) + r * rad
    t = np.array([-rad[1], rad[0]])
    return p, t


def _ks_node_layout(pieces, n, disk, rho):
    """Per-piece node counts and fractions, denser where the boundary turns.

    Every piece joint carries a node; within a piece the spacing is uniform
    and bounded so the turning angle per node stays below 6*pi/n.
    """
    theta_allow = (6.0 * np.pi / n) / 1.5
    curv = {"disk_arc": 1.0 / disk.radius, "fillet": 1.0 / rho, "chord": 0.0}
    lens = np.array([p[2] for p in pieces])
    kaps = np.array([curv[p[0]] for p in pieces])

    def counts_for(d_u):
        dens = np.maximum(d_u, kaps / theta_allow)
        return np.maximum(1, np.ceil(lens * dens - 1e-12).astype(int))

    lo, hi = 1e-12, n / lens.sum()
    while counts_for(hi).sum() < n:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if counts_for(mid).sum() <= n:
            lo = mid
        else:
            hi = mid
    counts = counts_for(lo)
    # distribute any remainder to the longest-spacing pieces
    while counts.sum() < n:
        counts[np.argmax(lens / counts)] += 1
    idx = np.repeat(np.arange(len(pieces)), counts)
    frac = np.concatenate([np.arange(c) / c for c in counts])
    return idx, frac


def make_ks_example(spec):
    """Boundary-touching strip pair at the bottom of the disk.

    The positive patch is the right part of the disk beyond the chord
    x1 = s, with both chord corners replaced by circular fillets of radius
    rho tangent to the chord and to the disk.  The mirror patch carries
    strength -1.  Returns (PatchSet, TangentField, marker) where marker is
    the boundary contact point of the positive patch nearest the bottom.
    """
    s, rho = spec.strip_halfwidth, spec.rounding_radius
    disk = spec.disk
    if abs(disk.center[0]) != 0.0:
        raise ScenarioError("strip example needs the disk centered on x1 = 0")
    if not (0.0 < s < 0.25 * disk.radius):
        raise ScenarioError("strip half-width must lie in (0, R/4)")
    if not (0.0 < rho < 0.5 * s):
        raise ScenarioError("rounding radius must lie in (0, s/2)")
    pieces = _ks_pieces(disk, s, rho)
    idx, frac = _ks_node_layout(pieces, spec.n, disk, rho)
    nodes = np.empty((spec.n, 2))
    for k in range(spec.n):
        nodes[k], _ = _piece_point(pieces[idx[k]], frac[k])
    curve = ClosedCurve(nodes)
    # product level set (x1 - s)(R^2 - |x-c|^2); magnitude from its gradient,
    # direction along the discrete tangent (mollifies the fillet corners)
    rel = nodes - disk.center
    g = disk.radius ** 2 - np.einsum("ij,ij->i", rel, rel)
    grad = np.stack([g - 2.0 * (nodes[:, 0] - s) * rel[:, 0],
                     -2.0 * (nodes[:, 0] - s) * rel[:, 1]], axis=1)
    mag = np.hypot(grad[:, 0], grad[:, 1])
    w1 = (mag / mag.min())[:, None] * curve.tangents()
    nodes2 = _mirror_nodes(nodes)
    w2 = _mirror_w(w1)
    ps = PatchSet(disk, [(1.0, curve), (-1.0, ClosedCurve(nodes2))])
    # Lagrangian marker at the contact tangency that the flow compresses
    # toward the axis (the upper one for positive vorticity on the right)
    c, R = disk.center, disk.radius
    q = np.sqrt((R - rho) ** 2 - (s + rho) ** 2)
    u_hat = np.array([s + rho, q]) / (R - rho)
    marker = c + R * u_hat
    return ps, TangentField([w1, w2]), marker


def build(spec):
    """Construct the initial SimState for a scenario."""
    if spec.kind == "single_patch":
        ps, w = make_single_patch(spec)
        return SimState(t=0.0, ps=ps, w=w)
    if spec.kind == "symmetric_pair":
        ps, w = make_symmetric_pair(spec)
        return SimState(t=0.0, ps=ps, w=w)
    ps, w, marker = make_ks_example(spec)
    eps = spec.epsilon
    return SimState(t=0.0, ps=ps, w=w, tracers=np.array([marker]),
                    env_a=eps ** 10, env_b=eps, env_active=True)
