"""Time integration of patch boundaries and the co-evolved tangent field.

Node positions follow the flow map under classical RK4, with the velocity at
every stage induced by the stage-updated polygons (fully coupled contour
dynamics).  The tangent field w obeys dw/dt = (grad u) w along trajectories
and is advanced with the same stages.

The velocity gradient at a node has two sources, selected by
StepConfig.grad_mode:

  "constrained"  d/ds of the node velocities gives (grad u) t along the
                 boundary; the normal column follows from div u = 0 and the
                 interior vorticity limit curl u = theta.  No extra kernel
                 sweeps.
  "oneside_fd"   one-sided finite differences of the velocity stepped into
                 the patch interior (the normal direction), tangential part
                 from neighbours as above.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import ClosedCurve, GeometryError, curvature, min_distance, _periodic_spline
from .kernel import PatchSet, Patch, QuadratureSpec, total_velocity_many


class StabilityError(RuntimeError):
    """A node left the disk by more than the clamp tolerance."""


class TopologyError(RuntimeError):
    """Patch boundaries touched; the run cannot continue."""


class ResolutionExhaustedError(RuntimeError):
    """Redistribution would exceed the configured node budget."""


class DegenerateFieldError(RuntimeError):
    """The tangent field magnitude collapsed at a node."""


class TangentField:
    """Per-node 2-vectors w, one array per patch, aligned with curve nodes."""

    __slots__ = ("per_patch",)

    def __init__(self, per_patch):
        self.per_patch = [np.ascontiguousarray(np.asarray(w, dtype=float))
                          for w in per_patch]
        for w in self.per_patch:
            if w.ndim != 2 or w.shape[1] != 2:
                raise ValueError("tangent field arrays must have shape (N, 2)")

    def magnitudes(self):
        return np.concatenate([np.hypot(w[:, 0], w[:, 1]) for w in self.per_patch])

    def copy(self):
        return TangentField([w.copy() for w in self.per_patch])

    def check(self, ps, normal_tol=1e-2):
        """Invariants: nonzero everywhere and tangent to the boundary."""
        for w, p in zip(self.per_patch, ps.patches):
            if w.shape[0] != p.boundary.n:
                raise ValueError("tangent field length does not match curve")
            mag = np.hypot(w[:, 0], w[:, 1])
            if np.any(mag <= 0.0):
                raise DegenerateFieldError("zero tangent vector")
            nrm = p.boundary.inward_normals()
            wn = np.abs(np.einsum("ij,ij->i", w, nrm))
            if np.any(wn > normal_tol * mag):
                frac = float((wn / mag).max())
                raise ValueError(f"tangent field not tangent: |w.n|/|w| = {frac:.3g}")


@dataclass
class SimState:
    t: float
    ps: PatchSet
    w: TangentField
    step_index: int = 0
    tracers: np.ndarray = None          # Lagrangian marker points, shape (k, 2)
    env_a: float = None                 # slow/fast envelope trackers (section-5 runs)
    env_b: float = None
    env_active: bool = False
    proj_frac: float = 0.0              # largest tangency projection last step

    def node_lists(self):
        return [p.boundary.nodes for p in self.ps.patches]


@dataclass
class StepConfig:
    dt: float
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    h_min: float = 1e-4
    h_max: float = 0.05
    curvature_refine: float = 0.5
    symmetry_axis: bool = False
    max_nodes: int = 65536
    grad_mode: str = "constrained"
    fd_step: float = 1e-4
    clamp_tol: float = 1e-8
    redistribute_every: int = 10
    collision_check_every: int = 10
    simplicity_check_every: int = 0     # 0 disables the O(N^2) check

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not (0 < self.h_min < self.h_max):
            raise ValueError("need 0 < h_min < h_max")
        if self.grad_mode not in ("constrained", "oneside_fd"):
            raise ValueError(f"unknown grad_mode {self.grad_mode!r}")


def _tangents_normals(nodes):
    d = np.roll(nodes, -1, axis=0) - np.roll(nodes, 1, axis=0)
    t = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    n = np.stack([-t[:, 1], t[:, 0]], axis=1)
    return t, n


def _dds(nodes, values):
    """d(values)/ds along the closed polyline, 3-point nonuniform stencil."""
    prev = np.roll(nodes, 1, axis=0)
    nxt = np.roll(nodes, -1, axis=0)
    a = np.hypot(*(nodes - prev).T)[:, None]
    b = np.hypot(*(nxt - nodes).T)[:, None]
    fm = np.roll(values, 1, axis=0)
    fp = np.roll(values, -1, axis=0)
    return (a * a * fp - b * b * fm + (b * b - a * a) * values) / (a * b * (a + b))


def _node_gradients(nodes, u_nodes, theta, ps_stage, quad, mode, fd_step):
    """Interior-limit grad u at every node of one patch, shape (N, 2, 2)."""
    t, n = _tangents_normals(nodes)
    gt = _dds(nodes, u_nodes)
    if mode == "constrained":
        # G t = gt;  tr G = 0;  curl G = theta (interior value)
        gn_t = np.einsum("ij,ij->i", gt, n) - theta
        gn_n = -np.einsum("ij,ij->i", gt, t)
        gn = gn_t[:, None] * t + gn_n[:, None] * n
    else:
        h = fd_step
        p1 = nodes - h * n
        p2 = nodes - 2.0 * h * n
        u0 = u_nodes
        u1 = total_velocity_many(ps_stage, p1, quad)
        u2 = total_velocity_many(ps_stage, p2, quad)
        # second-order one-sided derivative along -n
        dminus = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h)
        gn = -dminus
    G = gt[:, :, None] * t[:, None, :] + gn[:, :, None] * n[:, None, :]
    return G


def _mirror_nodes(nodes):
    m = nodes * np.array([-1.0, 1.0])
    idx = (-np.arange(nodes.shape[0])) % nodes.shape[0]
    return np.ascontiguousarray(m[idx])


def _mirror_w(w):
    idx = (-np.arange(w.shape[0])) % w.shape[0]
    out = w[idx].copy()
    out[:, 1] *= -1.0
    return np.ascontiguousarray(out)


def _axis_mirror_valid(ps):
    return (len(ps.patches) == 2
            and ps.patches[0].theta == -ps.patches[1].theta
            and abs(ps.disk.center[0]) == 0.0)


def _stage_patchset(ps, node_lists, mirrored):
    curves = []
    if mirrored:
        c1 = node_lists[0]
        curves = [c1, _mirror_nodes(c1)]
    else:
        curves = node_lists
    patches = [Patch(p.theta, ClosedCurve(nd, check_orientation=False))
               for p, nd in zip(ps.patches, curves)]
    return PatchSet(ps.disk, patches, validate=False)


def step_rk4(s, cfg):
    """One classical RK4 step of the coupled (positions, tangent field) system."""
    ps = s.ps
    dt = cfg.dt
    mirrored = cfg.symmetry_axis and _axis_mirror_valid(ps)
    n_evolve = 1 if mirrored else len(ps.patches)
    counts = [ps.patches[i].boundary.n for i in range(n_evolve)]
    splits = np.cumsum(counts)[:-1]
    ntr = 0 if s.tracers is None else s.tracers.shape[0]

    X0 = [ps.patches[i].boundary.nodes.copy() for i in range(n_evolve)]
    W0 = [s.w.per_patch[i].copy() for i in range(n_evolve)]
    T0 = None if ntr == 0 else s.tracers.copy()

    def eval_stage(Xs, Ts, Ws):
        ps_stage = _stage_patchset(ps, Xs, mirrored)
        pts = np.vstack(Xs) if ntr == 0 else np.vstack(Xs + [Ts])
        u = total_velocity_many(ps_stage, pts, cfg.quad)
        u_nodes = np.split(u[:sum(counts)], splits) if n_evolve > 1 else [u[:counts[0]]]
        u_tr = u[sum(counts):] if ntr else None
        Gs = [_node_gradients(Xs[i], u_nodes[i], ps.patches[i].theta, ps_stage,
                              cfg.quad, cfg.grad_mode, cfg.fd_step)
              for i in range(n_evolve)]
        kw_stage = [np.einsum("nij,nj->ni", Gs[i], Ws[i]) for i in range(n_evolve)]
        return u_nodes, kw_stage, u_tr

    kx = [None] * 4
    kw = [None] * 4
    kt = [None] * 4
    Xs, Ws, Ts = X0, W0, T0
    coeffs = (0.5, 0.5, 1.0)
    for stage in range(4):
        kx[stage], kw[stage], kt[stage] = eval_stage(Xs, Ts, Ws)
        if stage < 3:
            c = coeffs[stage]
            Xs = [X0[i] + dt * c * kx[stage][i] for i in range(n_evolve)]
            Ws = [W0[i] + dt * c * kw[stage][i] for i in range(n_evolve)]
            if ntr:
                Ts = T0 + dt * c * kt[stage]

    Xn = [X0[i] + dt / 6.0 * (kx[0][i] + 2 * kx[1][i] + 2 * kx[2][i] + kx[3][i])
          for i in range(n_evolve)]
    Wn = [W0[i] + dt / 6.0 * (kw[0][i] + 2 * kw[1][i] + 2 * kw[2][i] + kw[3][i])
          for i in range(n_evolve)]
    Tn = None
    if ntr:
        Tn = T0 + dt / 6.0 * (kt[0] + 2 * kt[1] + 2 * kt[2] + kt[3])

    # clamp tiny boundary exits; larger ones mean dt is too large
    c, R = ps.disk.center, ps.disk.radius
    proj_max = 0.0
    new_patches = []
    new_w = []
    for i in range(n_evolve):
        rel = Xn[i] - c
        r = np.hypot(rel[:, 0], rel[:, 1])
        exited = r > R
        if np.any(exited):
            worst = float((r[exited] - R).max())
            if worst > cfg.clamp_tol:
                raise StabilityError(
                    f"node left the disk by {worst:.3e} > {cfg.clamp_tol:.1e}; reduce dt")
            Xn[i] = np.where(exited[:, None], c + rel * (R / r)[:, None], Xn[i])
        # restore tangency of w (and guard against collapse)
        curve = ClosedCurve(Xn[i], check_orientation=False)
        nrm = curve.inward_normals()
        wmag = np.hypot(Wn[i][:, 0], Wn[i][:, 1])
        if np.any(wmag < 1e-12):
            raise DegenerateFieldError("tangent field collapsed below 1e-12")
        wn = np.einsum("ij,ij->i", Wn[i], nrm)
        frac = float(np.max(np.abs(wn) / wmag))
        proj_max = max(proj_max, frac)
        Wn[i] = Wn[i] - wn[:, None] * nrm
        new_patches.append(Patch(ps.patches[i].theta, curve))
        new_w.append(Wn[i])
    if proj_max > 0.01:
        warnings.warn(f"tangency projection removed {proj_max:.2%} of |w|",
                      RuntimeWarning, stacklevel=2)
    if Tn is not None:
        rel = Tn - c
        r = np.hypot(rel[:, 0], rel[:, 1])
        exited = r > R
        if np.any(exited):
            worst = float((r[exited] - R).max())
            if worst > cfg.clamp_tol:
                raise StabilityError(f"tracer left the disk by {worst:.3e}")
            Tn = np.where(exited[:, None], c + rel * (R / r)[:, None], Tn)

    if mirrored:
        new_patches.append(Patch(ps.patches[1].theta,
                                 ClosedCurve(_mirror_nodes(Xn[0]), check_orientation=False)))
        new_w.append(_mirror_w(Wn[0]))

    ps_new = PatchSet(ps.disk, new_patches, validate=False)
    return replace(s, t=s.t + dt, ps=ps_new, w=TangentField(new_w),
                   step_index=s.step_index + 1, tracers=Tn, proj_frac=proj_max)


def evolve_tangent(s, grad_samples, dt):
    """Advance w one RK4 step of dw/dt = G w with G frozen at grad_samples.

    grad_samples: per-patch arrays of per-node 2x2 matrices.  Tangency is
    restored by projection afterwards (at most 1% of |w|; larger projections
    raise a warning).
    """
    new_w = []
    proj_max = 0.0
    for p, w, G in zip(s.ps.patches, s.w.per_patch, grad_samples):
        G = np.asarray(G, dtype=float)
        k1 = np.einsum("nij,nj->ni", G, w)
        k2 = np.einsum("nij,nj->ni", G, w + 0.5 * dt * k1)
        k3 = np.einsum("nij,nj->ni", G, w + 0.5 * dt * k2)
        k4 = np.einsum("nij,nj->ni", G, w + dt * k3)
        wn = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        mag = np.hypot(wn[:, 0], wn[:, 1])
        if np.any(mag < 1e-12):
            raise DegenerateFieldError("tangent field collapsed below 1e-12")
        nrm = p.boundary.inward_normals()
        comp = np.einsum("ij,ij->i", wn, nrm)
        proj_max = max(proj_max, float(np.max(np.abs(comp) / mag)))
        new_w.append(wn - comp[:, None] * nrm)
    if proj_max > 0.01:
        warnings.warn(f"tangency projection removed {proj_max:.2%} of |w|",
                      RuntimeWarning, stacklevel=2)
    return TangentField(new_w)


def _resample_patch(nodes, w, h_min, h_max, curvature_refine):
    """New nodes equidistributed against the curvature-aware target spacing."""
    curve = ClosedCurve(nodes, check_orientation=False)
    kap = np.abs(curvature(curve))
    h_tgt = np.minimum(h_max, curvature_refine / np.maximum(kap, 1e-300))
    h_tgt = np.clip(h_tgt, h_min, h_max)
    gaps = curve.chord_lengths()
    h_seg = np.minimum(h_tgt, np.roll(h_tgt, -1))
    if np.all(gaps <= h_seg) and np.all(gaps >= np.maximum(0.4 * h_seg, h_min)):
        return None
    s, spl, total = _periodic_spline(nodes)
    svals = np.append(s, total)
    dens = 1.0 / np.append(h_tgt, h_tgt[:1])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(svals))])
    n_new = max(8, int(np.ceil(cum[-1])))
    targets = cum[-1] * np.arange(n_new) / n_new
    s_new = np.interp(targets, cum, svals)
    new_nodes = spl(s_new)
    wsp = CubicSpline(svals, np.vstack([w, w[:1]]), bc_type="periodic")
    new_w = wsp(s_new)
    return new_nodes, new_w


def _restore_area(nodes, target_area):
    """Uniform normal offset driving the polygon area back to target."""
    curve_nodes = nodes
    for _ in range(4):
        curve = ClosedCurve(curve_nodes, check_orientation=False)
        area = curve.signed_area()
        err = target_area - area
        if abs(err) <= 1e-15 * max(1.0, abs(target_area)):
            break
        per = curve.perimeter()
        curve_nodes = curve_nodes + (err / per) * (-curve.inward_normals())
    return curve_nodes


def redistribute(s, cfg):
    """Insert/remove nodes so spacing obeys [h_min, h_max] and curvature.

    Node spacing is additionally bounded by curvature_refine/|kappa|.  The
    tangent field rides along through the same periodic interpolant, and the
    per-patch area change is driven below 1e-8 relative by a uniform normal
    offset.
    """
    changed = False
    new_patches = []
    new_w = []
    total_nodes = 0
    for p, w in zip(s.ps.patches, s.w.per_patch):
        res = _resample_patch(p.boundary.nodes, w, cfg.h_min, cfg.h_max,
                              cfg.curvature_refine)
        if res is None:
            new_patches.append(p)
            new_w.append(w)
            total_nodes += p.boundary.n
            continue
        nodes, wn = res
        nodes = _restore_area(nodes, p.boundary.signed_area())
        total_nodes += nodes.shape[0]
        if total_nodes > cfg.max_nodes:
            raise ResolutionExhaustedError(
                f"redistribution needs {total_nodes} nodes > max_nodes={cfg.max_nodes}")
        changed = True
        curve = ClosedCurve(nodes, check_orientation=False)
        nrm = curve.inward_normals()
        wn = wn - np.einsum("ij,ij->i", wn, nrm)[:, None] * nrm
        new_patches.append(Patch(p.theta, curve))
        new_w.append(wn)
    if not changed:
        return s
    ps_new = PatchSet(s.ps.disk, new_patches, validate=False)
    return replace(s, ps=ps_new, w=TangentField(new_w))


def enforce_symmetry(s):
    """Replace patch 2 by the exact mirror of patch 1 about x1 = 0.

    Requires exactly two patches with opposite strengths.  The mirrored
    tangent field follows w2(x) = -reflect(w1(reflect(x))).  Idempotent.
    """
    ps = s.ps
    if len(ps.patches) != 2 or ps.patches[0].theta != -ps.patches[1].theta:
        raise ValueError("symmetry enforcement needs two patches with opposite strengths")
    nodes2 = _mirror_nodes(ps.patches[0].boundary.nodes)
    w2 = _mirror_w(s.w.per_patch[0])
    ps_new = PatchSet(ps.disk, [ps.patches[0],
                                Patch(ps.patches[1].theta,
                                      ClosedCurve(nodes2, check_orientation=False))],
                      validate=False)
    return replace(s, ps=ps_new, w=TangentField([s.w.per_patch[0], w2]))


def run(initial, cfg, T, sink):
    """March the state to time T, emitting diagnostics and snapshots.

    `initial` is a SimState (see scenarios.build for constructing one).
    `sink` carries the cadences and receives the output: it must provide
    diagnostics_every, snapshot_every, on_record(state), on_snapshot(state)
    and on_finish(state).  On any stepping error the last consistent state is
    snapshotted before the exception propagates.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    s = initial
    nsteps = int(np.floor(T / cfg.dt + 1e-9))
    sink.on_record(s)
    if s.step_index % max(1, sink.snapshot_every) == 0:
        sink.on_snapshot(s)
    try:
        for k in range(nsteps):
            s = step_rk4(s, cfg)
            if cfg.symmetry_axis and _axis_mirror_valid(s.ps):
                s = enforce_symmetry(s)
            if cfg.redistribute_every and s.step_index % cfg.redistribute_every == 0:
                s = redistribute(s, cfg)
            if cfg.collision_check_every and s.step_index % cfg.collision_check_every == 0:
                for i in range(len(s.ps.patches)):
                    for j in range(i + 1, len(s.ps.patches)):
                        if min_distance(s.ps.patches[i].boundary,
                                        s.ps.patches[j].boundary) <= 0.0:
                            raise TopologyError(f"patches {i} and {j} collided")
            if cfg.simplicity_check_every and s.step_index % cfg.simplicity_check_every == 0:
                from .geometry import curve_is_simple
                for i, p in enumerate(s.ps.patches):
                    if not curve_is_simple(p.boundary):
                        raise TopologyError(f"patch {i} boundary self-intersects")
            env_step = getattr(sink, "env_step", None)
            if env_step is not None:
                s = env_step(s, cfg.dt)
            if s.step_index % max(1, sink.diagnostics_every) == 0:
                sink.on_record(s)
            if s.step_index % max(1, sink.snapshot_every) == 0:
                sink.on_snapshot(s)
    except Exception:
        sink.on_snapshot(s)
        raise
    sink.on_finish(s)
    return s
