"""Scenario and sweep configuration: YAML in, validated dataclasses out.

Every validation error names the exact config path that caused it
(`uavs[0].detect_prob: ...`), so a bad file fails loudly before any
simulation starts. Relative file references resolve against the directory
of the config file that mentions them.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

import yaml

from .planner import POLICIES, PolicyConfig

SWEEP_AXES = ("n_uavs", "n_targets", "delay_km", "threshold", "detect_prob")

DEFAULT_TICK_SECONDS = 5.0
DEFAULT_MAX_TICKS = 2000


class ConfigError(ValueError):
    """Raised when a config file is malformed; message names the bad path."""


@dataclass(frozen=True)
class UavSpec:
    depot: tuple[float, float]
    velocity_kmh: float
    detect_radius: float
    detect_prob: float


@dataclass(frozen=True)
class StrategyRef:
    """Strategy name + parameter map, as referenced from a config file."""

    name: str
    params: tuple[tuple[str, float], ...] = ()

    def build(self):
        from .strategies import make_strategy

        return make_strategy(self.name, dict(self.params))


@dataclass(frozen=True)
class TargetClassSpec:
    name: str
    velocity_kmh: tuple[float, float]
    strategies: tuple[StrategyRef, ...]
    model_path: str


@dataclass(frozen=True)
class TargetSpec:
    class_name: str
    entry: int | None = None  # None draws uniformly over the entry edges


@dataclass(frozen=True)
class ScenarioConfig:
    graph_path: str
    uavs: tuple[UavSpec, ...]
    targets: tuple[TargetSpec, ...]
    classes: tuple[TargetClassSpec, ...]
    policy: PolicyConfig = PolicyConfig()
    delay_km: float = 0.0
    tick_seconds: float = DEFAULT_TICK_SECONDS
    max_ticks: int = DEFAULT_MAX_TICKS
    grid_radius: float | None = None  # None: team-minimum detection radius

    def class_named(self, name: str) -> TargetClassSpec:
        for cls in self.classes:
            if cls.name == name:
                return cls
        raise KeyError(f"unknown target class {name!r}")

    def team_min_radius(self) -> float:
        if self.grid_radius is not None:
            return self.grid_radius
        if not self.uavs:
            raise ConfigError("grid.radius: required when the scenario has no UAVs")
        return min(u.detect_radius for u in self.uavs)

    def team_min_detect_prob(self) -> float:
        return min(u.detect_prob for u in self.uavs)


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axes: tuple[tuple[str, tuple], ...]  # ordered (axis name, values)
    trials: int
    seed: int


# ---------------------------------------------------------------------------
# Parsing helpers: every reader carries the config path for error messages.


def _need_map(data, path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    return data


def _need_list(data, path: str) -> list:
    if not isinstance(data, list):
        raise ConfigError(f"{path}: expected a list, got {type(data).__name__}")
    return data


def _need_float(data, path: str, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(data, bool) or not isinstance(data, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {data!r}")
    v = float(data)
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {v}")
    return v


def _need_int(data, path: str, lo: int | None = None) -> int:
    if isinstance(data, bool) or not isinstance(data, int):
        raise ConfigError(f"{path}: expected an integer, got {data!r}")
    if lo is not None and data < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {data}")
    return data


def _reject_unknown(data: dict, known: set[str], path: str) -> None:
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown key {sorted(unknown)[0]!r} (known: {sorted(known)})")


def _parse_uav(data, path: str) -> UavSpec:
    data = _need_map(data, path)
    _reject_unknown(data, {"depot", "velocity_kmh", "detect_radius", "detect_prob"}, path)
    depot = _need_list(data.get("depot"), f"{path}.depot")
    if len(depot) != 2:
        raise ConfigError(f"{path}.depot: expected [x, y]")
    x = _need_float(depot[0], f"{path}.depot[0]")
    y = _need_float(depot[1], f"{path}.depot[1]")
    v = _need_float(data.get("velocity_kmh"), f"{path}.velocity_kmh")
    if v <= 0:
        raise ConfigError(f"{path}.velocity_kmh: must be positive, got {v}")
    r = _need_float(data.get("detect_radius"), f"{path}.detect_radius")
    if r <= 0:
        raise ConfigError(f"{path}.detect_radius: must be positive, got {r}")
    p = _need_float(data.get("detect_prob"), f"{path}.detect_prob")
    if not (0.0 < p <= 1.0):
        raise ConfigError(f"{path}.detect_prob: must be in (0, 1], got {p}")
    return UavSpec((x, y), v, r, p)


def _parse_strategy_ref(data, path: str) -> StrategyRef:
    from .strategies import strategy_names

    data = _need_map(data, path)
    if "name" not in data:
        raise ConfigError(f"{path}.name: required")
    name = data["name"]
    if name not in strategy_names():
        raise ConfigError(f"{path}.name: unknown strategy {name!r} (known: {strategy_names()})")
    params = tuple(
        sorted((k, _need_float(v, f"{path}.{k}")) for k, v in data.items() if k != "name")
    )
    ref = StrategyRef(name, params)
    try:
        ref.build()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ref


def _parse_class(name: str, data, path: str, base_dir: str) -> TargetClassSpec:
    data = _need_map(data, path)
    _reject_unknown(data, {"velocity_kmh", "strategies", "model"}, path)
    vr = _need_list(data.get("velocity_kmh"), f"{path}.velocity_kmh")
    if len(vr) != 2:
        raise ConfigError(f"{path}.velocity_kmh: expected [low, high]")
    lo = _need_float(vr[0], f"{path}.velocity_kmh[0]")
    hi = _need_float(vr[1], f"{path}.velocity_kmh[1]")
    if not (0 < lo <= hi):
        raise ConfigError(f"{path}.velocity_kmh: need 0 < low <= high, got [{lo}, {hi}]")
    strategies = _need_list(data.get("strategies"), f"{path}.strategies")
    if not strategies:
        raise ConfigError(f"{path}.strategies: must list at least one strategy")
    refs = tuple(
        _parse_strategy_ref(s, f"{path}.strategies[{i}]") for i, s in enumerate(strategies)
    )
    if "model" not in data or not isinstance(data["model"], str):
        raise ConfigError(f"{path}.model: required (path to a compiled movement model)")
    model_path = os.path.normpath(os.path.join(base_dir, data["model"]))
    return TargetClassSpec(name, (lo, hi), refs, model_path)


def _parse_target(data, path: str, class_names: set[str]) -> TargetSpec:
    data = _need_map(data, path)
    _reject_unknown(data, {"class", "entry"}, path)
    cls = data.get("class")
    if cls not in class_names:
        raise ConfigError(f"{path}.class: unknown class {cls!r} (known: {sorted(class_names)})")
    entry = data.get("entry", "uniform")
    if entry == "uniform":
        return TargetSpec(cls, None)
    if isinstance(entry, bool) or not isinstance(entry, int):
        raise ConfigError(f"{path}.entry: expected 'uniform' or an entry edge id, got {entry!r}")
    return TargetSpec(cls, entry)


def _parse_policy(data, path: str) -> PolicyConfig:
    if data is None:
        return PolicyConfig()
    data = _need_map(data, path)
    _reject_unknown(data, {"name", "threshold", "detect_prob"}, path)
    name = data.get("name", "adaptive")
    if name not in POLICIES:
        raise ConfigError(f"{path}.name: unknown policy {name!r} (known: {list(POLICIES)})")
    threshold = _need_float(data.get("threshold", 0.2), f"{path}.threshold", lo=0.0)
    p = data.get("detect_prob")
    if p is not None:
        p = _need_float(p, f"{path}.detect_prob")
        if not (0.0 < p <= 1.0):
            raise ConfigError(f"{path}.detect_prob: must be in (0, 1], got {p}")
    return PolicyConfig(policy=name, threshold=threshold, detect_prob=p)


def scenario_from_dict(data: dict, base_dir: str = ".") -> ScenarioConfig:
    data = _need_map(data, "scenario")
    _reject_unknown(
        data,
        {
            "graph",
            "uavs",
            "targets",
            "classes",
            "policy",
            "delay_km",
            "tick_seconds",
            "max_ticks",
            "grid_radius",
        },
        "scenario",
    )
    if "graph" not in data or not isinstance(data["graph"], str):
        raise ConfigError("graph: required (path to a road graph file)")
    graph_path = os.path.normpath(os.path.join(base_dir, data["graph"]))

    uavs = tuple(
        _parse_uav(u, f"uavs[{i}]") for i, u in enumerate(_need_list(data.get("uavs", []), "uavs"))
    )

    classes_map = _need_map(data.get("classes", {}), "classes")
    classes = tuple(
        _parse_class(name, cdata, f"classes.{name}", base_dir)
        for name, cdata in classes_map.items()
    )
    class_names = {c.name for c in classes}

    target_list = _need_list(data.get("targets"), "targets")
    if not target_list:
        raise ConfigError("targets: must list at least one target")
    targets = tuple(
        _parse_target(t, f"targets[{i}]", class_names) for i, t in enumerate(target_list)
    )

    policy = _parse_policy(data.get("policy"), "policy")
    delay_km = _need_float(data.get("delay_km", 0.0), "delay_km", lo=0.0)
    tick_seconds = _need_float(data.get("tick_seconds", DEFAULT_TICK_SECONDS), "tick_seconds")
    if tick_seconds <= 0:
        raise ConfigError(f"tick_seconds: must be positive, got {tick_seconds}")
    max_ticks = _need_int(data.get("max_ticks", DEFAULT_MAX_TICKS), "max_ticks", lo=1)

    grid_radius = data.get("grid_radius")
    if grid_radius is not None:
        grid_radius = _need_float(grid_radius, "grid_radius")
        if grid_radius <= 0:
            raise ConfigError(f"grid_radius: must be positive, got {grid_radius}")
        if uavs and grid_radius > min(u.detect_radius for u in uavs) + 1e-9:
            raise ConfigError(
                "grid_radius: exceeds the smallest UAV detection radius; "
                "cells would not fit inside every detection circle"
            )
    if not uavs and grid_radius is None:
        raise ConfigError("grid_radius: required when no UAVs are configured")

    return ScenarioConfig(
        graph_path=graph_path,
        uavs=uavs,
        targets=targets,
        classes=classes,
        policy=policy,
        delay_km=delay_km,
        tick_seconds=tick_seconds,
        max_ticks=max_ticks,
        grid_radius=grid_radius,
    )


def _load_yaml(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None


def load_scenario(path: str) -> ScenarioConfig:
    data = _load_yaml(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a top-level mapping")
    try:
        return scenario_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_sweep(path: str, default_seed: int = 0) -> SweepSpec:
    data = _load_yaml(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a top-level mapping")
    base_dir = os.path.dirname(os.path.abspath(path))
    try:
        _reject_unknown(data, {"base", "trials", "seed", "axes"}, "sweep")
        if "base" not in data or not isinstance(data["base"], str):
            raise ConfigError("base: required (path to a scenario file)")
        base = load_scenario(os.path.normpath(os.path.join(base_dir, data["base"])))
        trials = _need_int(data.get("trials"), "trials", lo=1)
        seed = _need_int(data.get("seed", default_seed), "seed", lo=0)
        axes_map = _need_map(data.get("axes", {}), "axes")
        if not axes_map:
            raise ConfigError("axes: must name at least one sweep axis")
        axes = []
        for name, values in axes_map.items():
            if name not in SWEEP_AXES:
                raise ConfigError(f"axes.{name}: unknown axis (known: {list(SWEEP_AXES)})")
            values = _need_list(values, f"axes.{name}")
            if not values:
                raise ConfigError(f"axes.{name}: must list at least one value")
            if name in ("n_uavs", "n_targets"):
                values = [_need_int(v, f"axes.{name}[{i}]", lo=0) for i, v in enumerate(values)]
            else:
                values = [_need_float(v, f"axes.{name}[{i}]") for i, v in enumerate(values)]
            axes.append((name, tuple(values)))
        return SweepSpec(base=base, axes=tuple(axes), trials=trials, seed=seed)
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(path) else f"{path}: {msg}") from None


def apply_axis(scenario: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """One sweep-axis override, returning a new scenario."""
    if axis == "n_uavs":
        n = int(value)
        if n > 0 and not scenario.uavs:
            raise ConfigError("axes.n_uavs: base scenario has no UAV to replicate")
        uavs = tuple(scenario.uavs[i % len(scenario.uavs)] for i in range(n)) if n else ()
        return dataclasses.replace(scenario, uavs=uavs)
    if axis == "n_targets":
        n = int(value)
        if n < 1:
            raise ConfigError("axes.n_targets: need at least one target")
        targets = tuple(scenario.targets[i % len(scenario.targets)] for i in range(n))
        return dataclasses.replace(scenario, targets=targets)
    if axis == "delay_km":
        return dataclasses.replace(scenario, delay_km=float(value))
    if axis == "threshold":
        policy = dataclasses.replace(scenario.policy, threshold=float(value))
        return dataclasses.replace(scenario, policy=policy)
    if axis == "detect_prob":
        p = float(value)
        if not (0.0 < p <= 1.0):
            raise ConfigError(f"axes.detect_prob: must be in (0, 1], got {p}")
        uavs = tuple(dataclasses.replace(u, detect_prob=p) for u in scenario.uavs)
        policy = dataclasses.replace(scenario.policy, detect_prob=None)
        return dataclasses.replace(scenario, uavs=uavs, policy=policy)
    raise ConfigError(f"unknown sweep axis {axis!r}")


def sweep_points(spec: SweepSpec):
    """Yield (ordered axis-value assignment, scenario) per grid point."""
    names = [name for name, _ in spec.axes]
    value_lists = [values for _, values in spec.axes]

    def rec(i: int, assignment: list, scenario: ScenarioConfig):
        if i == len(names):
            yield tuple(assignment), scenario
            return
        for v in value_lists[i]:
            yield from rec(i + 1, assignment + [(names[i], v)], apply_axis(scenario, names[i], v))

    yield from rec(0, [], spec.base)
