"""Measured quantities: curvature extrema, separation, tangent-field norms,
the corner-weighted vorticity integral, contact/envelope trackers, and
growth-model fitting.

All section-5 diagnostics work in the frame whose origin is the bottom
point of the disk, matching the coordinates in which the corner integral
and the trackers are defined.  The tangent-field quantities are restricted
to boundary nodes, and the Hoelder quotient is sampled (adjacent pairs, a
deterministic stratified random pool, and antipodal pairs), so it is a
lower bound of the true seminorm.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import _compiled
from .geometry import curvature, min_distance
from .kernel import total_velocity_many


@dataclass
class DiagnosticsRecord:
    t: float
    kappa_max: float
    areas: list
    delta_sep: float
    A_sup: float
    A_inf: float
    A_gamma: float
    x1_leftmost: float
    omega_corner: float
    a_env: float = math.nan
    b_env: float = math.nan


@dataclass
class GrowthFit:
    model: str                  # "exponential" | "double_exponential"
    params: dict
    r2: float
    fits: dict = field(default_factory=dict)


def _frame_origin(disk):
    # origin at the bottom boundary point of the disk
    return np.array([disk.center[0], disk.center[1] - disk.radius])


def holder_quotient_pairs(nodes, w, gamma, rng, n_random=1000):
    """Sampled sup of |w(x)-w(y)| / |x-y|^gamma over node pairs.

    Pairs: all adjacent, a stratified random pool over log-spaced index
    separations, and a deterministic antipodal sweep.
    """
    n = nodes.shape[0]
    i = np.arange(n)
    pairs = [np.stack([i, (i + 1) % n], axis=1)]
    # antipodal and power-of-two separations from a few base points
    for sep in 2 ** np.arange(1, int(np.log2(max(n // 2, 2))) + 1):
        base = np.arange(0, n, max(1, n // 16))
        pairs.append(np.stack([base, (base + sep) % n], axis=1))
    # stratified random pool
    n_strata = max(1, int(np.log2(max(n // 2, 2))))
    per = max(1, n_random // n_strata)
    for k in range(n_strata):
        lo, hi = 2 ** k, min(2 ** (k + 1), n // 2 + 1)
        if lo >= hi:
            continue
        seps = rng.integers(lo, hi, size=per)
        base = rng.integers(0, n, size=per)
        pairs.append(np.stack([base, (base + seps) % n], axis=1))
    ij = np.unique(np.vstack(pairs), axis=0)
    ij = ij[ij[:, 0] != ij[:, 1]]
    dx = nodes[ij[:, 0]] - nodes[ij[:, 1]]
    dw = w[ij[:, 0]] - w[ij[:, 1]]
    r = np.hypot(dx[:, 0], dx[:, 1])
    q = np.hypot(dw[:, 0], dw[:, 1]) / r ** gamma
    return float(q.max()) if q.size else 0.0


LeftmostContact = namedtuple("LeftmostContact", ["value", "contact"])


def leftmost_contact(state, boundary_tol=1e-3):
    """Min x1 over boundary-contact nodes of the positive patch.

    Falls back to the plain minimum over all its nodes (contact=False) when
    no node lies within boundary_tol of the disk boundary.
    """
    ps = state.ps
    disk = ps.disk
    pos = next((p for p in ps.patches if p.theta > 0), ps.patches[0])
    nodes = pos.boundary.nodes
    r = np.hypot(*(nodes - disk.center).T)
    near = np.abs(r - disk.radius) <= boundary_tol
    x1 = nodes[:, 0] - disk.center[0]
    if np.any(near):
        return LeftmostContact(float(x1[near].min()), True)
    return LeftmostContact(float(x1.min()), False)


def corner_integral(state, corner, resolution=512):
    """(4/pi) * integral of y1*y2/|y|^4 * omega over the quadrant window.

    The quadrant is {y1 >= corner1, y2 >= corner2} in the bottom-origin
    frame; patch interiors are rasterized at the given resolution.
    """
    disk = state.ps.disk
    o = _frame_origin(disk)
    c1, c2 = float(corner[0]), float(corner[1])
    if c1 < 0 or np.hypot(c1, c2 - disk.radius) > disk.radius * (1 + 1e-12):
        raise ValueError("corner must lie in the closed right half of the disk")
    x_max = disk.center[0] + disk.radius - o[0]
    y_max = disk.center[1] + disk.radius - o[1]
    total = 0.0
    for p in state.ps.patches:
        poly = np.ascontiguousarray(p.boundary.refined_polygon(1))
        if poly[:, 0].max() - o[0] < c1 or poly[:, 1].max() - o[1] < c2:
            continue
        total += p.theta * _compiled.raster_corner_sum(
            poly, o[0], o[1], c1, c2, x_max, y_max, int(resolution))
    return 4.0 / np.pi * total


EnvelopeUpdate = namedtuple("EnvelopeUpdate", ["a", "b", "active"])


def envelope_track(state, a_prev, b_prev, dt, quad=None, n_samples=64):
    """Forward-Euler update of the fast/slow envelope abscissas.

    a follows the max of u1 over the vertical sub-diagonal segment at
    x1 = a_prev, b the min at x1 = b_prev (bottom-origin frame).  Disabled
    (active=False, values unchanged) once either leaves (0, R).
    """
    from .kernel import QuadratureSpec
    quad = quad or QuadratureSpec()
    disk = state.ps.disk
    R = disk.radius
    if not (0.0 < a_prev < R and 0.0 < b_prev < R) or a_prev > b_prev:
        return EnvelopeUpdate(a_prev, b_prev, False)
    o = _frame_origin(disk)

    def u1_extreme(v, take_max):
        lo = R - np.sqrt(max(R * R - v * v, 0.0))
        hi = min(v, 2.0 * R)
        if hi <= lo:
            return 0.0
        xs = lo + (hi - lo) * (np.arange(n_samples) + 0.5) / n_samples
        pts = np.stack([np.full(n_samples, v + o[0]), xs + o[1]], axis=1)
        u = total_velocity_many(state.ps, pts, quad)
        return float(u[:, 0].max() if take_max else u[:, 0].min())

    a_new = a_prev + dt * u1_extreme(a_prev, take_max=True)
    b_new = b_prev + dt * u1_extreme(b_prev, take_max=False)
    return EnvelopeUpdate(a_new, b_new, True)


def compute_record(state, gamma, seed=0, corner=(0.01, 0.01), corner_resolution=512,
                   n_pairs=1000):
    """One diagnostics sample of the current state."""
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    ps = state.ps
    kmax = max(float(np.abs(curvature(p.boundary)).max()) for p in ps.patches)
    areas = [p.boundary.signed_area() for p in ps.patches]
    if len(ps.patches) > 1:
        delta = min(min_distance(ps.patches[i].boundary, ps.patches[j].boundary)
                    for i in range(len(ps.patches))
                    for j in range(i + 1, len(ps.patches)))
    else:
        delta = math.inf
    mags = state.w.magnitudes()
    rng = np.random.default_rng([seed, state.step_index])
    agamma = max(holder_quotient_pairs(p.boundary.nodes, w, gamma, rng, n_pairs)
                 for p, w in zip(ps.patches, state.w.per_patch))
    lm = leftmost_contact(state)
    om = corner_integral(state, corner, corner_resolution)
    return DiagnosticsRecord(
        t=state.t, kappa_max=kmax, areas=areas, delta_sep=float(delta),
        A_sup=float(mags.max()), A_inf=float(mags.min()), A_gamma=agamma,
        x1_leftmost=lm.value, omega_corner=om,
        a_env=math.nan if state.env_a is None else float(state.env_a),
        b_env=math.nan if state.env_b is None else float(state.env_b))


def _linfit(t, y):
    A = np.stack([np.ones_like(t), t], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef[0], coef[1], r2


def fit_growth(series):
    """Fit exponential and double-exponential growth models to (t, value).

    Exponential: log(value) against t.  Double exponential:
    log(log(value/value0 + e)) against t, value0 the first sample.  Returns
    the better-r2 model; both fits are reported in .fits.
    """
    pts = [(float(t), float(v)) for t, v in series]
    if len(pts) < 10:
        raise ValueError("need at least 10 samples")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(v <= 0.0):
        raise ValueError("values must be positive")
    if v[-1] <= v[0]:
        raise ValueError("series has no overall growth trend")
    c0, rate, r2_exp = _linfit(t, np.log(v))
    y = np.log(np.log(v / v[0] + np.e))
    d0, inner_rate, r2_dexp = _linfit(t, y)
    fits = {"exponential": {"rate": rate, "intercept": c0, "r2": r2_exp},
            "double_exponential": {"inner_rate": inner_rate, "intercept": d0,
                                   "r2": r2_dexp}}
    if r2_dexp >= r2_exp:
        return GrowthFit("double_exponential", fits["double_exponential"],
                         r2_dexp, fits)
    return GrowthFit("exponential", fits["exponential"], r2_exp, fits)
