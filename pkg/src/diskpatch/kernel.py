"""The disk Biot-Savart law for vortex patches: u = v + v~.

v is the free-space contribution of each patch and v~ the image correction
that enforces no penetration through the disk boundary.  Both are evaluated
as contour integrals over the patch polygons with exact per-segment
integration; the image term is the pull-back of the reflected-patch integral,
whose inversion Jacobian cancels the |y|^-4 weight exactly:

    v(x)  = -(theta/2pi) * contour_int log|x-y| dl(y)
    v~(x) =  (theta/2pi) * area_int (x-y*)perp/|x-y*|^2 dy,   y* = c + R^2 (y-c)/|y-c|^2

with (a,b)perp = (b,-a).  A brute-force area oracle guards the sign and
branch conventions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _compiled
from .geometry import ClosedCurve, DiskDomain, GeometryError, min_distance


class KernelError(ValueError):
    pass


class NearSingularError(KernelError):
    """Evaluation point too close to a patch boundary for this operation."""


class DomainError(KernelError):
    """Evaluation point outside the operation's admissible region."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Contour refinement, oracle raster resolution, and the near-boundary guard."""
    refinement: int = 1
    oracle_cells: int = 1024
    pv_exclusion: float = 1e-3

    def __post_init__(self):
        if self.refinement < 1 or self.oracle_cells < 1 or self.pv_exclusion <= 0:
            raise ValueError("quadrature parameters must be positive")


@dataclass(frozen=True)
class Patch:
    theta: float
    boundary: ClosedCurve


class PatchSet:
    """The vorticity sum theta_k * chi_{Omega_k} together with its disk."""

    __slots__ = ("disk", "patches")

    def __init__(self, disk, patches, validate=True):
        self.disk = disk
        self.patches = tuple(Patch(float(t), c) if not isinstance(t, Patch) else t
                             for (t, c) in [(p.theta, p.boundary) if isinstance(p, Patch)
                                            else p for p in patches])
        if validate:
            self.validate()

    def validate(self):
        tol = 1e-10
        for p in self.patches:
            if p.theta == 0.0:
                raise KernelError("patch strength must be nonzero")
            r = np.hypot(*(p.boundary.nodes - self.disk.center).T)
            worst = float(r.max()) - self.disk.radius
            if worst > tol:
                raise KernelError(f"patch node outside the disk by {worst:.3e}")
        for i in range(len(self.patches)):
            for j in range(i + 1, len(self.patches)):
                d = min_distance(self.patches[i].boundary, self.patches[j].boundary)
                if d <= 0.0:
                    raise KernelError(f"patches {i} and {j} touch or overlap")

    @property
    def thetas(self):
        return np.array([p.theta for p in self.patches])

    def __len__(self):
        return len(self.patches)


@dataclass
class VelocityJet:
    """Velocity with optional derivatives at one point."""
    u: np.ndarray
    grad_u: np.ndarray = None
    hess_u: np.ndarray = None


def _pack(ps, refinement):
    """Concatenated refined polygon vertices in disk-centered coordinates."""
    polys = [p.boundary.refined_polygon(refinement) for p in ps.patches]
    offs = np.zeros(len(polys) + 1, dtype=np.int64)
    for i, poly in enumerate(polys):
        offs[i + 1] = offs[i] + poly.shape[0]
    vx = np.empty(offs[-1])
    vy = np.empty(offs[-1])
    c = ps.disk.center
    for i, poly in enumerate(polys):
        vx[offs[i]:offs[i + 1]] = poly[:, 0] - c[0]
        vy[offs[i]:offs[i + 1]] = poly[:, 1] - c[1]
    return vx, vy, offs, ps.thetas


def velocity_parts_many(ps, points, q=QuadratureSpec()):
    """(free, image) velocity arrays, each (n, 2), at many points.

    Points outside the closed disk get the analytic continuation of the
    image field (the contour form plus the reflected-support correction), so
    transient integrator-stage excursions through the boundary see a smooth
    field.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if len(ps.patches) == 0:
        z = np.zeros((points.shape[0], 2))
        return z, z.copy()
    vx, vy, offs, thetas = _pack(ps, q.refinement)
    c, R = ps.disk.center, ps.disk.radius
    out = np.empty((points.shape[0], 4))
    _compiled.vel_sums(np.ascontiguousarray(points[:, 0] - c[0]),
                       np.ascontiguousarray(points[:, 1] - c[1]),
                       vx, vy, offs, thetas, R, out)
    rel = points - c
    r2 = np.einsum("ij,ij->i", rel, rel)
    outside = r2 > (R * (1.0 + 1e-9)) ** 2
    if np.any(outside):
        X = rel[outside, 0] + 1j * rel[outside, 1]
        pre = c + (R * R) * rel[outside] / r2[outside, None]
        corr = np.zeros(X.shape[0], dtype=complex)
        for p in ps.patches:
            poly = np.ascontiguousarray(p.boundary.refined_polygon(q.refinement))
            sel = _compiled.winding_inside(np.ascontiguousarray(pre), poly)
            if np.any(sel):
                corr[sel] += 0.5j * p.theta * R ** 4 * X[sel] / np.abs(X[sel]) ** 4
        out[outside, 2] += corr.real
        out[outside, 3] += corr.imag
    return out[:, 0:2], out[:, 2:4]


def free_velocity(ps, x, q=QuadratureSpec()):
    """Free-space patch velocity v(x); defined for any finite x."""
    f, _ = velocity_parts_many(ps, x, q)
    return f[0]


def image_velocity(ps, x, q=QuadratureSpec()):
    """Image correction v~(x); only defined inside the closed disk."""
    x = np.asarray(x, dtype=float)
    if np.hypot(*(x - ps.disk.center)) > ps.disk.radius * (1.0 + 1e-12):
        raise DomainError("image velocity is defined inside the disk only")
    _, g = velocity_parts_many(ps, x, q)
    return g[0]


def total_velocity(ps, x, q=QuadratureSpec()):
    x = np.asarray(x, dtype=float)
    if np.hypot(*(x - ps.disk.center)) > ps.disk.radius * (1.0 + 1e-12):
        raise DomainError("total velocity is defined inside the disk only")
    f, g = velocity_parts_many(ps, x, q)
    return f[0] + g[0]


def total_velocity_many(ps, points, q=QuadratureSpec()):
    f, g = velocity_parts_many(ps, points, q)
    return f + g


def _boundary_distance(ps, points, refinement):
    """Distance from each point to the nearest patch polygon."""
    points = np.ascontiguousarray(np.atleast_2d(points))
    d = np.full(points.shape[0], np.inf)
    for p in ps.patches:
        poly = np.ascontiguousarray(p.boundary.refined_polygon(refinement))
        d = np.minimum(d, _compiled.points_to_polyline_distance(points, poly))
    return d


def _local_vorticity(ps, points, refinement):
    """Sum of theta_k chi_k at each point, plus the image-field vorticity
    -theta_k R^4/|x-c|^4 for points inside a reflected patch."""
    points = np.atleast_2d(points)
    w = np.zeros(points.shape[0])
    c, R = ps.disk.center, ps.disk.radius
    rel = points - c
    r2 = np.einsum("ij,ij->i", rel, rel)
    outside = r2 > R * R
    pre = np.where(outside[:, None], c + (R * R) * rel / np.where(r2 > 0, r2, 1.0)[:, None],
                   points)
    for p in ps.patches:
        poly = np.ascontiguousarray(p.boundary.refined_polygon(refinement))
        inside = _compiled.winding_inside(np.ascontiguousarray(points), poly)
        w += p.theta * (inside & ~outside)
        refl = _compiled.winding_inside(np.ascontiguousarray(pre), poly)
        sel = refl & outside
        if np.any(sel):
            w[sel] += -p.theta * (R ** 4) / (r2[sel] ** 2)
    return w


def velocity_gradient_many(ps, points, q=QuadratureSpec(), check=True):
    """Exact polygon velocity gradients (2x2, trace free) at many points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if len(ps.patches) == 0:
        return np.zeros((n, 2, 2))
    if check:
        d = _boundary_distance(ps, points, q.refinement)
        if np.any(d <= q.pv_exclusion):
            raise NearSingularError(
                f"point within {q.pv_exclusion} of a patch boundary; "
                "use finite differences of the velocity instead")
    vx, vy, offs, thetas = _pack(ps, q.refinement)
    c, R = ps.disk.center, ps.disk.radius
    out = np.empty((n, 4))
    _compiled.grad_sums(np.ascontiguousarray(points[:, 0] - c[0]),
                        np.ascontiguousarray(points[:, 1] - c[1]),
                        vx, vy, offs, thetas, R, out)
    wbar = (out[:, 0] + out[:, 2]) + 1j * (out[:, 1] + out[:, 3])
    # image correction for points inside a reflected patch (outside the disk)
    rel = points - c
    r2 = np.einsum("ij,ij->i", rel, rel)
    outside = r2 > R * R
    if np.any(outside):
        X = rel[:, 0] + 1j * rel[:, 1]
        pre = c + (R * R) * rel / r2[:, None]
        for p in ps.patches:
            poly = np.ascontiguousarray(p.boundary.refined_polygon(q.refinement))
            sel = outside & _compiled.winding_inside(np.ascontiguousarray(pre), poly)
            if np.any(sel):
                wbar[sel] += -1j * p.theta * R ** 4 / (X[sel] * np.conj(X[sel]) ** 3)
    omega = _local_vorticity(ps, points, q.refinement)
    G = np.empty((n, 2, 2))
    G[:, 0, 0] = wbar.real
    G[:, 1, 1] = -wbar.real
    G[:, 1, 0] = wbar.imag + 0.5 * omega
    G[:, 0, 1] = wbar.imag - 0.5 * omega
    return G


def velocity_gradient(ps, x, q=QuadratureSpec()):
    """Gradient matrix of u at x (principal value plus jump, in closed form)."""
    return velocity_gradient_many(ps, x, q)[0]


def velocity_hessian(ps, x, q=QuadratureSpec()):
    """Second derivatives of u at x, away from patch closures and reflections.

    Returns H[i, j, k] = d_j d_k u_i, symmetric in (j, k).
    """
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    if len(ps.patches) == 0:
        return np.zeros((2, 2, 2))
    d = _boundary_distance(ps, pts, q.refinement)
    if d[0] <= q.pv_exclusion:
        raise NearSingularError("point too close to a patch boundary")
    c, R = ps.disk.center, ps.disk.radius
    rel = pts - c
    r2 = float(np.einsum("ij,ij->i", rel, rel)[0])
    if r2 > R * R:
        pre = c + (R * R) * rel / r2
        for p in ps.patches:
            poly = np.ascontiguousarray(p.boundary.refined_polygon(q.refinement))
            if _compiled.winding_inside(np.ascontiguousarray(pre), poly)[0]:
                raise DomainError("point lies inside a reflected patch")
    vx, vy, offs, thetas = _pack(ps, q.refinement)
    out = np.empty((1, 4))
    _compiled.hess_sums(np.ascontiguousarray(pts[:, 0] - c[0]),
                        np.ascontiguousarray(pts[:, 1] - c[1]),
                        vx, vy, offs, thetas, R, out)
    f2 = (out[0, 0] + out[0, 2]) + 1j * (out[0, 1] + out[0, 3])
    eta = np.array([[1.0 + 0.0j, -1.0j], [-1.0j, -1.0 + 0.0j]])
    H = np.empty((2, 2, 2))
    H[0] = (eta * f2).real
    H[1] = (eta * f2).imag
    return H


def velocity_jet(ps, x, q=QuadratureSpec(), with_hessian=False):
    u = total_velocity(ps, x, q)
    G = velocity_gradient(ps, x, q)
    H = velocity_hessian(ps, x, q) if with_hessian else None
    return VelocityJet(u=u, grad_u=G, hess_u=H)


def oracle_velocity_area(ps, x, cells):
    """Brute-force raster of both kernels of the velocity law.

    Each patch interior is rasterized on a cells x cells grid over its
    bounding box; the free kernel is summed over interior cell centers and
    the image kernel over their inversions (the |y|^-4 weight cancels the
    inversion Jacobian).  Converges to total_velocity as cells grows.
    """
    if cells < 64:
        raise KernelError("oracle needs cells >= 64")
    x = np.asarray(x, dtype=float)
    u = np.zeros(2)
    c, R = ps.disk.center, ps.disk.radius
    for p in ps.patches:
        poly = np.ascontiguousarray(p.boundary.refined_polygon(8))
        x0, y0 = poly.min(axis=0)
        x1, y1 = poly.max(axis=0)
        dx = (x1 - x0) / cells
        dy = (y1 - y0) / cells
        rows = _compiled.raster_kernel_sums(poly, x[0], x[1], x0, y0, dx, dy,
                                            cells, cells, c[0], c[1], R)
        s = rows.sum(axis=0) * (dx * dy) * (p.theta / (2.0 * np.pi))
        u += s[0:2] + s[2:4]
    return u


def log_lipschitz_check(ps, sample_pairs, q=QuadratureSpec()):
    """Max of |u(x)-u(y)| / (|x-y| log(1+1/|x-y|)) over the given pairs."""
    best = 0.0
    pairs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in sample_pairs]
    pairs = [(a, b) for a, b in pairs if not np.array_equal(a, b)]
    if not pairs or len(ps.patches) == 0:
        return 0.0
    pts = np.array([p for ab in pairs for p in ab])
    u = total_velocity_many(ps, pts, q)
    for i, (a, b) in enumerate(pairs):
        r = float(np.hypot(*(a - b)))
        du = float(np.hypot(*(u[2 * i] - u[2 * i + 1])))
        best = max(best, du / (r * np.log1p(1.0 / r)))
    return best
