"""Scenario files.

A scenario is a YAML mapping; see the README for the full schema. Every
physical constant must be given explicitly; only solver tolerances have
defaults. Errors name the offending key.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .kinetics import KineticsModel, make_model
from .signal import CosineSignal, CosineTerm, TravelingWave
from .torus import TorusGrid

__all__ = ["ConfigError", "Scenario", "load_scenario", "parse_scenario", "STAGES"]

STAGES = ("homogenize", "equilibrate", "stability", "simulate-slow", "simulate-direct", "validate")
REQUIRES = {
    "homogenize": (),
    "equilibrate": ("homogenize",),
    "stability": ("homogenize", "equilibrate"),
    "simulate-slow": ("homogenize",),
    "simulate-direct": ("homogenize",),
    "validate": ("homogenize",),
}


class ConfigError(ValueError):
    pass


def _get(tree: dict, key: str, path: str, kind=None, default=...):
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: expected a mapping")
    if key not in tree:
        if default is ...:
            raise ConfigError(f"missing key {path}.{key}".lstrip("."))
        return default
    value = tree[key]
    if kind is float:
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}: expected a number, got {value!r}") from None
        if not np.isfinite(value):
            raise ConfigError(f"{path}.{key}: must be finite")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
    elif kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def _float_list(value, path):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a list of numbers") from None


@dataclass(frozen=True)
class Scenario:
    name: str
    signal: object
    torus: TorusGrid
    model: KineticsModel
    chi: float
    kappa: float
    mu: float
    deltas: tuple[float, ...]
    prey_diffusivity: float
    slow_length: float
    slow_points: int
    stages: tuple[str, ...]
    stability: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.torus.dim

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def stage_plan(self, requested) -> list[str]:
        """Requested stages plus prerequisites, in pipeline order."""
        wanted = set()
        for s in requested:
            if s not in STAGES:
                raise ConfigError(f"stages: unknown stage {s!r}; known: {', '.join(STAGES)}")
            wanted.add(s)
            wanted.update(REQUIRES[s])
        return [s for s in STAGES if s in wanted]


def _signal(tree, dim_hint=None):
    path = "signal"
    family = _get(tree, "family", path, str)
    amp = _get(tree, "amplitude", path, float)
    if amp < 0:
        raise ConfigError("signal.amplitude: must be non-negative")
    if family == "cosine-product":
        terms_tree = tree.get("terms")
        if terms_tree is None:
            terms_tree = [{k: tree[k] for k in ("modes", "phases", "tau_mode", "tau_phase") if k in tree}]
            terms_tree[0]["amplitude"] = amp
        terms = []
        for i, t in enumerate(terms_tree):
            tp = f"signal.terms[{i}]"
            modes = _get(t, "modes", tp, list)
            if not all(isinstance(m, int) for m in modes):
                raise ConfigError(f"{tp}.modes: expected integers")
            phases = t.get("phases")
            terms.append(CosineTerm(_get(t, "amplitude", tp, float, amp), tuple(modes),
                                    tuple(_float_list(phases, f"{tp}.phases")) if phases else None,
                                    _get(t, "tau_mode", tp, int, 0),
                                    _get(t, "tau_phase", tp, float, 0.0)))
        try:
            sig = CosineSignal(tuple(terms))
        except ValueError as exc:
            raise ConfigError(f"signal: {exc}") from None
        return sig, len(terms[0].modes)
    if family == "traveling-wave":
        direction = _float_list(_get(tree, "direction", path), "signal.direction")
        try:
            sig = TravelingWave(amp, tuple(direction), _get(tree, "speed", path, float),
                                _get(tree, "phase", path, float, 0.0))
        except ValueError as exc:
            raise ConfigError(f"signal.direction: {exc}") from None
        return sig, len(direction)
    raise ConfigError(f"signal.family: unknown family {family!r} "
                      "(expected cosine-product or traveling-wave)")


def parse_scenario(tree: dict) -> Scenario:
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    name = str(_get(tree, "scenario", "", str))
    sig, dim = _signal(_get(tree, "signal", "", dict))
    if not 1 <= dim <= 3:
        raise ConfigError("signal: fast dimension must be 1, 2 or 3")

    kin = _get(tree, "kinetics", "", dict)
    params = _get(kin, "params", "kinetics", dict, {})
    try:
        model = make_model(_get(kin, "model", "kinetics", str), **params)
    except ValueError as exc:
        raise ConfigError(f"kinetics: {exc}") from None

    const = _get(tree, "constants", "", dict)
    chi = _get(const, "chi", "constants", float)
    kappa = _get(const, "kappa", "constants", float)
    mu = _get(const, "mu", "constants", float)
    if chi < 0 or kappa <= 0 or mu <= 0:
        raise ConfigError("constants: need chi >= 0, kappa > 0, mu > 0")
    delta = _get(const, "delta", "constants")
    deltas = tuple(_float_list(delta if isinstance(delta, list) else [delta], "constants.delta"))
    if any(d <= 0 for d in deltas):
        raise ConfigError("constants.delta: must be positive")
    prey_diff = _get(const, "prey_diffusivity", "constants", float, 0.0)

    grids = _get(tree, "grids", "", dict)
    fast = _get(grids, "fast", "grids", dict)
    pts = _get(fast, "points", "grids.fast", int)
    tau_pts = _get(fast, "tau_points", "grids.fast", int)
    try:
        if isinstance(sig, TravelingWave):
            torus = sig.natural_grid(pts, tau_pts)
        else:
            torus = TorusGrid((2 * np.pi,) * dim, 2 * np.pi, (pts,) * dim, tau_pts)
    except ValueError as exc:
        raise ConfigError(f"grids.fast: {exc}") from None
    slow = _get(grids, "slow", "grids", dict)
    slow_length = _get(slow, "length", "grids.slow", float)
    slow_points = _get(slow, "points", "grids.slow", int)
    if slow_length <= 0 or slow_points < 4:
        raise ConfigError("grids.slow: need length > 0 and points >= 4")

    stages = tree.get("stages", ["homogenize"])
    if not isinstance(stages, list) or not all(isinstance(s, str) for s in stages):
        raise ConfigError("stages: expected a list of stage names")
    for s in stages:
        if s not in STAGES:
            raise ConfigError(f"stages: unknown stage {s!r}")

    def section(key):
        value = tree.get(key, {})
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a mapping")
        return value

    return Scenario(name, sig, torus, model, chi, kappa, mu, deltas, prey_diff, slow_length,
                    slow_points, tuple(stages), section("stability"), section("simulate"),
                    section("validate"), tree)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        tree = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_scenario(tree)
