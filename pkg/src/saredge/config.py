"""Experiment configuration: flat key-path text files with JSON values.

A config file is a sequence of ``key.path = value`` lines; ``#`` starts a
comment.  Values are parsed as JSON where possible (numbers, booleans,
null, lists, objects) and fall back to bare strings.  Command-line flags
override file values for sweeps.  The full schema is documented in the
README; errors name the offending key path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .dictionary import EdgeletDictionary, build_edgelet_dictionary
from .errors import ConfigError
from .forward import NoiseCovariance
from .geometry import (
    Disc,
    FrequencyGrid,
    GroundScene,
    ImagingGrid,
    PlatformTrajectory,
    PointTarget,
    Rectangle,
    make_circular_trajectory,
    make_linear_trajectory,
    make_synthetic_scene,
)
from .solver import SolverConfig


@dataclass
class ExperimentConfig:
    """All parameters of one end-to-end experiment."""

    grid_extent: float = 0.5
    grid_extent_y: Optional[float] = None
    grid_n: int = 32
    grid_n_y: Optional[int] = None
    scene_primitives: list = field(default_factory=list)
    trajectory_kind: str = "circular"
    trajectory_range: float = 500.0
    trajectory_altitude: float = 100.0
    trajectory_angular_extent_deg: float = 360.0
    trajectory_start_angle_deg: float = 0.0
    trajectory_start: Optional[list] = None
    trajectory_stop: Optional[list] = None
    trajectory_pulse_count: int = 64
    trajectory_far_field_ratio: float = 10.0
    freq_center_hz: float = 2.0e9
    freq_bandwidth_hz: float = 2.0e9
    freq_n_samples: int = 32
    edge_order: float = 2.0
    dict_n_orientations: int = 8
    dict_n_scales: int = 2
    dict_stride: int = 4
    dict_length: Optional[float] = None
    dict_thickness: Optional[float] = None
    solver_lambda: Optional[float] = None  # None: 0.01 * max|b| after the first pulse
    solver_max_iters: int = 2000
    solver_rel_tol: float = 1e-9
    solver_lipschitz_mode: str = "spectral"
    solver_power_iters: int = 200
    solver_warm_start: bool = True
    solver_real_coefficients: bool = False
    noise_sigma: float = 0.0  # per-sample complex noise std deviation; 0 = noiseless
    seed: int = 0
    output_dir: str = "saredge-out"
    checkpoint_every: int = 0
    deterministic: bool = False

    # --- construction -----------------------------------------------------
    KEY_MAP = {
        "grid.extent": "grid_extent",
        "grid.extent_y": "grid_extent_y",
        "grid.n": "grid_n",
        "grid.n_y": "grid_n_y",
        "scene.primitives": "scene_primitives",
        "trajectory.kind": "trajectory_kind",
        "trajectory.range": "trajectory_range",
        "trajectory.altitude": "trajectory_altitude",
        "trajectory.angular_extent_deg": "trajectory_angular_extent_deg",
        "trajectory.start_angle_deg": "trajectory_start_angle_deg",
        "trajectory.start": "trajectory_start",
        "trajectory.stop": "trajectory_stop",
        "trajectory.pulse_count": "trajectory_pulse_count",
        "trajectory.far_field_ratio": "trajectory_far_field_ratio",
        "frequency.center_hz": "freq_center_hz",
        "frequency.bandwidth_hz": "freq_bandwidth_hz",
        "frequency.n_samples": "freq_n_samples",
        "edge.order": "edge_order",
        "dictionary.n_orientations": "dict_n_orientations",
        "dictionary.n_scales": "dict_n_scales",
        "dictionary.stride": "dict_stride",
        "dictionary.length": "dict_length",
        "dictionary.thickness": "dict_thickness",
        "solver.lambda": "solver_lambda",
        "solver.max_iters": "solver_max_iters",
        "solver.rel_tol": "solver_rel_tol",
        "solver.lipschitz_mode": "solver_lipschitz_mode",
        "solver.power_iters": "solver_power_iters",
        "solver.warm_start": "solver_warm_start",
        "solver.real_coefficients": "solver_real_coefficients",
        "noise.sigma": "noise_sigma",
        "seed": "seed",
        "output_dir": "output_dir",
        "checkpoint_every": "checkpoint_every",
        "deterministic": "deterministic",
    }

    _INT_FIELDS = frozenset(
        {
            "grid_n",
            "grid_n_y",
            "trajectory_pulse_count",
            "freq_n_samples",
            "dict_n_orientations",
            "dict_n_scales",
            "dict_stride",
            "solver_max_iters",
            "solver_power_iters",
            "seed",
            "checkpoint_every",
        }
    )

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        kwargs = {}
        for key, value in mapping.items():
            attr = cls.KEY_MAP.get(key)
            if attr is None:
                raise ConfigError(f"unknown config key {key!r}")
            if attr in cls._INT_FIELDS and value is not None:
                if not isinstance(value, (int, float)) or isinstance(value, bool) or int(value) != value:
                    raise ConfigError(f"{key}: expected an integer, got {value!r}")
                value = int(value)
            kwargs[attr] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_mapping(parse_flat_config(f.read()))

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with non-None overrides applied (CLI flags beat file values)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def check(cond, key, message):
            if not cond:
                raise ConfigError(f"{key}: {message}")

        check(self.grid_extent > 0, "grid.extent", "must be positive")
        check(self.grid_n >= 2 and self.grid_n % 2 == 0, "grid.n", "must be an even count >= 2")
        if self.grid_n_y is not None:
            check(self.grid_n_y >= 2 and self.grid_n_y % 2 == 0, "grid.n_y", "must be an even count >= 2")
        check(self.trajectory_kind in ("circular", "linear"), "trajectory.kind", "must be 'circular' or 'linear'")
        check(self.trajectory_pulse_count >= 1, "trajectory.pulse_count", "must be >= 1")
        if self.trajectory_kind == "linear":
            check(self.trajectory_start is not None, "trajectory.start", "required for linear trajectories")
            check(self.trajectory_stop is not None, "trajectory.stop", "required for linear trajectories")
        check(self.freq_n_samples >= 1, "frequency.n_samples", "must be >= 1")
        check(self.freq_center_hz > 0, "frequency.center_hz", "must be positive")
        check(
            self.freq_center_hz - 0.5 * self.freq_bandwidth_hz > 0,
            "frequency.bandwidth_hz",
            "band must stay strictly positive",
        )
        check(self.edge_order >= 1, "edge.order", "must be >= 1")
        check(self.dict_n_orientations >= 1, "dictionary.n_orientations", "must be >= 1")
        check(self.dict_n_scales >= 1, "dictionary.n_scales", "must be >= 1")
        check(self.dict_stride >= 1, "dictionary.stride", "must be >= 1")
        if self.solver_lambda is not None:
            check(self.solver_lambda > 0, "solver.lambda", "must be positive (or null for automatic)")
        check(self.solver_rel_tol > 0, "solver.rel_tol", "must be positive")
        check(self.solver_max_iters >= 1, "solver.max_iters", "must be >= 1")
        check(
            self.solver_lipschitz_mode in ("spectral", "power"),
            "solver.lipschitz_mode",
            "must be 'spectral' or 'power'",
        )
        check(self.noise_sigma >= 0, "noise.sigma", "must be nonnegative")
        check(self.checkpoint_every >= 0, "checkpoint_every", "must be nonnegative")

    # --- builders -----------------------------------------------------------
    def build_grid(self) -> ImagingGrid:
        extent_y = self.grid_extent_y if self.grid_extent_y is not None else self.grid_extent
        n_y = self.grid_n_y if self.grid_n_y is not None else self.grid_n
        return ImagingGrid(extent_x=self.grid_extent, extent_y=extent_y, n_x=self.grid_n, n_y=n_y)

    def build_scene(self, grid: ImagingGrid) -> GroundScene:
        return make_synthetic_scene(grid, parse_primitives(self.scene_primitives))

    def build_trajectory(self, grid: ImagingGrid) -> PlatformTrajectory:
        if self.trajectory_kind == "linear":
            return make_linear_trajectory(
                self.trajectory_start,
                self.trajectory_stop,
                self.trajectory_pulse_count,
                scene_diameter=grid.diameter,
                far_field_ratio=self.trajectory_far_field_ratio,
            )
        return make_circular_trajectory(
            radius=self.trajectory_range,
            altitude=self.trajectory_altitude,
            n_pulses=self.trajectory_pulse_count,
            angular_extent=np.deg2rad(self.trajectory_angular_extent_deg),
            start_angle=np.deg2rad(self.trajectory_start_angle_deg),
            scene_diameter=grid.diameter,
            far_field_ratio=self.trajectory_far_field_ratio,
        )

    def build_freq_grid(self) -> FrequencyGrid:
        return FrequencyGrid.from_band(self.freq_center_hz, self.freq_bandwidth_hz, self.freq_n_samples)

    def build_dictionary(self, grid: ImagingGrid) -> EdgeletDictionary:
        return build_edgelet_dictionary(
            grid,
            n_orientations=self.dict_n_orientations,
            n_scales=self.dict_n_scales,
            stride=self.dict_stride,
            length=self.dict_length,
            thickness=self.dict_thickness,
        )

    def noise_covariance(self) -> NoiseCovariance:
        if self.noise_sigma == 0.0:
            return NoiseCovariance.noiseless(self.freq_n_samples)
        return NoiseCovariance.scaled_identity(self.noise_sigma**2, self.freq_n_samples)

    def solver_config(self, lam: float) -> SolverConfig:
        return SolverConfig(
            lam=lam,
            max_iters=self.solver_max_iters,
            rel_tol=self.solver_rel_tol,
            lipschitz_mode=self.solver_lipschitz_mode,
            power_iters=self.solver_power_iters,
            warm_start=self.solver_warm_start,
            real_coefficients=self.solver_real_coefficients,
        )


def parse_flat_config(text: str) -> dict:
    """Parse ``key = value`` lines into a flat mapping; values are JSON fragments."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            mapping[key] = json.loads(value)
        except json.JSONDecodeError:
            mapping[key] = value  # bare string
    return mapping


_PRIMITIVE_FIELDS = {
    "point": ("x", "y", "amplitude"),
    "disc": ("x", "y", "radius", "amplitude"),
    "rect": ("x", "y", "width", "height", "amplitude"),
}


def parse_primitives(entries) -> list:
    """Turn config primitive dicts into scene primitives, naming bad fields."""
    if not isinstance(entries, (list, tuple)):
        raise ConfigError("scene.primitives: must be a list of primitive objects")
    out = []
    for i, entry in enumerate(entries):
        path = f"scene.primitives[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: must be an object with a 'kind' field")
        kind = entry.get("kind")
        if kind not in _PRIMITIVE_FIELDS:
            raise ConfigError(f"{path}.kind: expected one of {sorted(_PRIMITIVE_FIELDS)}, got {kind!r}")
        allowed = _PRIMITIVE_FIELDS[kind]
        for key in entry:
            if key != "kind" and key not in allowed:
                raise ConfigError(f"{path}.{key}: not a field of {kind!r} primitives")
        kwargs = {}
        for name in allowed:
            if name == "amplitude":
                kwargs[name] = float(entry.get(name, 1.0))
                continue
            if name not in entry:
                raise ConfigError(f"{path}.{name}: required for {kind!r} primitives")
            try:
                kwargs[name] = float(entry[name])
            except (TypeError, ValueError):
                raise ConfigError(f"{path}.{name}: expected a number, got {entry[name]!r}") from None
        cls = {"point": PointTarget, "disc": Disc, "rect": Rectangle}[kind]
        out.append(cls(**kwargs))
    return out
