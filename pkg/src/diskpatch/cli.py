"""Command-line surface: run, resume, verify, report.

`--threads` caps the numba thread pool and changes wall time only; every
summation is ordered per target, so results are bitwise identical for any
thread count.
"""

import argparse
import json
import os
import sys

import numpy as np


def _set_threads(n):
    if n:
        import numba
        numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def _load_config(args):
    from .config import parse_config
    with open(args.config) as f:
        text = f.read()
    cfg = parse_config(text)
    if getattr(args, "output", None):
        cfg.values["output"] = args.output
        from .config import config_hash
        cfg = cfg.__class__(**{**cfg.__dict__,
                               "output_dir": args.output,
                               "config_hash": config_hash(cfg.values)})
    return cfg


def cmd_run(args):
    from . import dynamics, scenarios
    from .io_store import RunSink, load_snapshot
    cfg = _load_config(args)
    resume = getattr(args, "resume", None) or cfg.resume_from
    if resume:
        state = load_snapshot(resume)
        remaining = cfg.T - state.t
    else:
        state = scenarios.build(cfg.scenario)
        remaining = cfg.T
    sink = RunSink(cfg.output_dir, cfg, echo=not args.quiet)
    dynamics.run(state, cfg.step, remaining, sink)
    return 0


def cmd_verify(args):
    from . import bounds, scenarios
    from .geometry import DiskDomain
    from .kernel import QuadratureSpec
    cfg = _load_config(args)
    outdir = os.path.join(cfg.output_dir, "reports")
    os.makedirs(outdir, exist_ok=True)
    gamma = cfg.gamma
    reports = []

    samples = []
    for axes, center in (((0.3, 0.3), (0.0, 0.0)),
                         ((0.4, 0.2), (0.0, 0.0)),
                         ((0.48, 0.06), (0.3, 0.2)),
                         ((0.24, 0.08), (-0.1, 0.55))):
        spec = scenarios.ScenarioSpec("single_patch", n=512,
                                      disk=DiskDomain((0, 0), 1.0),
                                      center=center, axes=axes)
        samples.append(scenarios.make_single_patch(spec))
    reports.append(bounds.verify_grad_log_bound(samples, gamma, grid_n=32))

    reports.append(bounds.verify_hessian_tangent_disk(
        [0.5, 0.25, 0.125], [0.1, 1.0, 10.0], n=256))

    errs = {}
    for r in (0.5, 0.25, 0.125):
        for hf in (0.1, 1.0, 10.0):
            errs[f"r={r},h={hf}r"] = bounds.verify_I1_identity(r, hf * r, 1.0, cells=1024)
    worst = max(errs.values())
    from .bounds import BoundReport
    reports.append(BoundReport("i1_identity", len(errs), worst,
                               [(1024, worst)],
                               "bounded" if worst < 1e-4 else "unbounded-trend",
                               {"errors": errs}))

    ksspec = scenarios.ScenarioSpec("ks_example", n=1024,
                                    disk=DiskDomain((0, 1), 1.0),
                                    strip_halfwidth=cfg.scenario.strip_halfwidth,
                                    rounding_radius=cfg.scenario.rounding_radius)
    ps, w, _ = scenarios.make_ks_example(ksspec)
    reports.append(bounds.verify_keylemma(ps, cfg.scenario.cone_angle,
                                          delta_grid=0.1, grid_n=24,
                                          table_res=512))

    ok = True
    for rep in reports:
        path = os.path.join(outdir, rep.name + ".json")
        with open(path + ".tmp", "w") as f:
            f.write(rep.to_json() + "\n")
        os.replace(path + ".tmp", path)
        print(f"{rep.name}: sup_ratio={rep.sup_ratio:.6g} verdict={rep.verdict}")
        ok = ok and rep.verdict == "bounded"
    return 0 if ok else 1


def cmd_report(args):
    from .bounds import verify_a_ode
    from .config import parse_config, config_hash
    from .diagnostics import DiagnosticsRecord, fit_growth
    from .io_store import snapshot_hashes
    rundir = args.run_dir
    cfg_path = os.path.join(rundir, "config.txt")
    with open(cfg_path) as f:
        text = f.read()
    cfg = parse_config(text, env={})
    with open(os.path.join(rundir, "config.hash")) as f:
        stored = f.read().strip()
    if cfg.config_hash != stored:
        print(f"config hash mismatch: {cfg.config_hash} != {stored}", file=sys.stderr)
        return 2
    snaps = os.path.join(rundir, "snapshots.jsonl")
    if os.path.exists(snaps):
        for h in snapshot_hashes(snaps):
            if h != stored:
                print(f"snapshot hash mismatch: {h} != {stored}", file=sys.stderr)
                return 2
    with open(os.path.join(rundir, "timeseries.csv")) as f:
        lines = f.read().splitlines()
    header = lines[0].split(",")
    cols = {name: i for i, name in enumerate(header)}
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    t = data[:, cols["t"]]
    summary = [f"run: {rundir}", f"samples: {len(t)}", f"t_final: {t[-1]:.17g}"]

    def series(name):
        return list(zip(t, data[:, cols[name]]))

    kap = data[:, cols["kappa_max"]]
    summary.append(f"kappa_max: {kap[0]:.6g} -> {kap[-1]:.6g}")
    if len(t) >= 10 and kap[-1] > kap[0] > 0:
        fit = fit_growth(series("kappa_max"))
        summary.append(f"kappa_max growth model: {fit.model} (r2={fit.r2:.6f})")
        for name, f in fit.fits.items():
            summary.append(f"  {name}: {f}")
    x1 = data[:, cols["x1_leftmost"]]
    if np.all(x1 > 0) and x1[-1] < x1[0]:
        A = np.stack([np.ones_like(t), t], axis=1)
        coef, *_ = np.linalg.lstsq(A, np.log(x1), rcond=None)
        summary.append(f"leftmost-contact decay rate: {-coef[1]:.6g} (log-linear fit)")
    rows = [DiagnosticsRecord(
        t=row[cols["t"]], kappa_max=row[cols["kappa_max"]], areas=[],
        delta_sep=row[cols["delta_sep"]], A_sup=row[cols["A_sup"]],
        A_inf=row[cols["A_inf"]], A_gamma=row[cols["A_gamma"]],
        x1_leftmost=row[cols["x1_leftmost"]],
        omega_corner=row[cols["omega_corner"]]) for row in data]
    if len(rows) >= 2:
        rep = verify_a_ode(rows)
        summary.append("tangent-norm ODE constants: "
                       + json.dumps({k: v for k, v in rep.details.items()
                                     if not k.endswith("_half")}))
    text_out = "\n".join(summary) + "\n"
    print(text_out, end="")
    with open(os.path.join(rundir, "summary.txt"), "w") as f:
        f.write(text_out)
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="diskpatch",
                                 description="Vortex patch contour dynamics in a disk")
    ap.add_argument("--threads", type=int, default=0,
                    help="numba thread cap (wall time only, never results)")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--output", default=None)
    p_run.add_argument("--resume", default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_res = sub.add_parser("resume", help="resume from a snapshot")
    p_res.add_argument("--config", required=True)
    p_res.add_argument("--resume", required=True)
    p_res.add_argument("--output", default=None)
    p_res.add_argument("--quiet", action="store_true")
    p_res.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the inequality verification suite")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--output", default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_rep = sub.add_parser("report", help="summarize a completed run directory")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(func=cmd_report)

    args = ap.parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
