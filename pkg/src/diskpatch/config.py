"""Run configuration: a flat key=value text format with strict validation.

Lines hold `key = value` assignments; `#` starts a comment; blank lines are
ignored.  Unknown keys are rejected (no silent typo defaults), and every
error names the key and its line number.  Environment variables of the form
DISKPATCH_<KEY> override file values.
"""

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import DiskDomain
from .kernel import QuadratureSpec
from .dynamics import StepConfig
from .scenarios import ScenarioSpec


class ConfigError(ValueError):
    pass


def _as_bool(s):
    if s.lower() in ("true", "on", "yes", "1"):
        return True
    if s.lower() in ("false", "off", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (parser, default); REQUIRED sentinel means the key must be present
REQUIRED = object()
_SCHEMA = {
    "scenario": (str, REQUIRED),
    "N": (int, REQUIRED),
    "dt": (float, REQUIRED),
    "T": (float, REQUIRED),
    "gamma": (float, REQUIRED),
    "seed": (int, 0),
    "output": (str, "runs/out"),
    "snapshot_every": (int, 100),
    "diagnostics_every": (int, 10),
    "resume_from": (str, ""),
    "disk_center_x": (float, None),
    "disk_center_y": (float, None),
    "disk_radius": (float, 1.0),
    "center_x": (float, 0.0),
    "center_y": (float, 0.0),
    "axis_a": (float, 0.25),
    "axis_b": (float, 0.25),
    "angle": (float, 0.0),
    "strip_halfwidth": (float, 0.05),
    "rounding_radius": (float, 0.0125),
    "cone_angle": (float, math.pi / 10),
    "epsilon": (float, 0.05),
    "refinement": (int, 1),
    "oracle_cells": (int, 1024),
    "pv_exclusion": (float, 1e-3),
    "h_min": (float, 1e-4),
    "h_max": (float, 0.05),
    "curvature_refine": (float, 0.5),
    "max_nodes": (int, 65536),
    "symmetry": (_as_bool, False),
    "grad_mode": (str, "constrained"),
    "fd_step": (float, 1e-4),
    "clamp_tol": (float, 1e-8),
    "redistribute_every": (int, 10),
    "collision_check_every": (int, 10),
    "simplicity_check_every": (int, 0),
    "corner_x": (float, 0.01),
    "corner_y": (float, 0.01),
    "corner_resolution": (int, 512),
    "pair_samples": (int, 1000),
}

_ENV_PREFIX = "DISKPATCH_"


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    step: StepConfig
    T: float
    gamma: float
    output_dir: str
    snapshot_every: int
    diagnostics_every: int
    seed: int
    resume_from: str
    corner: tuple
    corner_resolution: int
    pair_samples: int
    values: dict
    config_hash: str

    def canonical_text(self):
        return canonical_text(self.values)


def canonical_text(values):
    lines = []
    for k in sorted(values):
        v = values[k]
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(values):
    return hashlib.sha256(canonical_text(values).encode()).hexdigest()[:16]


def _parse_pairs(text):
    pairs = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        pairs[key] = (val, ln)
    return pairs


def _constraint(cond, key, where, msg):
    if not cond:
        raise ConfigError(f"{where}: {key}: {msg}")


def parse_config(text, env=None):
    """Parse and fully validate a run configuration."""
    pairs = _parse_pairs(text)
    env = os.environ if env is None else env
    for name, val in env.items():
        if name.startswith(_ENV_PREFIX):
            key = name[len(_ENV_PREFIX):].lower()
            if key == "n":
                key = "N"
            if key not in _SCHEMA:
                raise ConfigError(f"env {name}: unknown key {key!r}")
            pairs[key] = (val, f"env {name}")
    values = {}
    for key, (parser, default) in _SCHEMA.items():
        if key in pairs:
            raw, where = pairs[key]
            try:
                values[key] = parser(raw)
            except ValueError as e:
                raise ConfigError(f"line {where}: {key}: {e}") from None
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            values[key] = default
    where = {k: pairs[k][1] if k in pairs else "default" for k in values}

    _constraint(values["scenario"] in ("single_patch", "symmetric_pair", "ks_example"),
                "scenario", where["scenario"],
                "must be single_patch, symmetric_pair or ks_example")
    _constraint(0.0 < values["gamma"] < 1.0, "gamma", where["gamma"],
                "must lie in (0, 1)")
    _constraint(values["T"] >= 0.0, "T", where["T"], "must be nonnegative")
    _constraint(values["dt"] > 0.0, "dt", where["dt"], "must be positive")
    _constraint(values["N"] >= 8, "N", where["N"], "must be at least 8")
    for key in ("snapshot_every", "diagnostics_every"):
        _constraint(values[key] >= 1, key, where[key], "must be positive")
    _constraint(0 < values["h_min"] < values["h_max"], "h_min", where["h_min"],
                "need 0 < h_min < h_max")

    if values["disk_center_x"] is None:
        values["disk_center_x"] = 0.0
        values["disk_center_y"] = 1.0 if values["scenario"] == "ks_example" else 0.0
    elif values["disk_center_y"] is None:
        values["disk_center_y"] = 0.0
    disk = DiskDomain((values["disk_center_x"], values["disk_center_y"]),
                      values["disk_radius"])
    scen = ScenarioSpec(
        kind=values["scenario"], n=values["N"], disk=disk,
        center=(values["center_x"], values["center_y"]),
        axes=(values["axis_a"], values["axis_b"]), angle=values["angle"],
        strip_halfwidth=values["strip_halfwidth"],
        rounding_radius=values["rounding_radius"],
        cone_angle=values["cone_angle"], epsilon=values["epsilon"])
    quad = QuadratureSpec(refinement=values["refinement"],
                          oracle_cells=values["oracle_cells"],
                          pv_exclusion=values["pv_exclusion"])
    step = StepConfig(dt=values["dt"], quad=quad, h_min=values["h_min"],
                      h_max=values["h_max"],
                      curvature_refine=values["curvature_refine"],
                      symmetry_axis=values["symmetry"],
                      max_nodes=values["max_nodes"],
                      grad_mode=values["grad_mode"], fd_step=values["fd_step"],
                      clamp_tol=values["clamp_tol"],
                      redistribute_every=values["redistribute_every"],
                      collision_check_every=values["collision_check_every"],
                      simplicity_check_every=values["simplicity_check_every"])
    return RunConfig(
        scenario=scen, step=step, T=values["T"], gamma=values["gamma"],
        output_dir=values["output"], snapshot_every=values["snapshot_every"],
        diagnostics_every=values["diagnostics_every"], seed=values["seed"],
        resume_from=values["resume_from"],
        corner=(values["corner_x"], values["corner_y"]),
        corner_resolution=values["corner_resolution"],
        pair_samples=values["pair_samples"],
        values=values, config_hash=config_hash(values))
