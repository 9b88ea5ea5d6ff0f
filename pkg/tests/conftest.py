import numpy as np
import pytest

from saredge.config import ExperimentConfig

# Small, fast experiment used across pipeline tests: 16x16 grid, 64-atom
# dictionary, spatial frequencies inside the grid Nyquist band, standoff at
# 100x the scene diameter so the far-field model is accurate.
BASE_CONFIG = {
    "grid.extent": 0.5,
    "grid.n": 16,
    "scene.primitives": [{"kind": "rect", "x": 0.0, "y": 0.0, "width": 0.5, "height": 0.35, "amplitude": 1.0}],
    "trajectory.kind": "circular",
    "trajectory.range": 142.0,
    "trajectory.altitude": 45.0,
    "trajectory.angular_extent_deg": 360.0,
    "trajectory.pulse_count": 16,
    "frequency.center_hz": 3.3e8,
    "frequency.bandwidth_hz": 4.6e8,
    "frequency.n_samples": 12,
    "edge.order": 2.0,
    "dictionary.n_orientations": 4,
    "dictionary.n_scales": 1,
    "dictionary.stride": 4,
    "solver.max_iters": 4000,
    "solver.rel_tol": 1e-10,
    "noise.sigma": 0.0,
    "seed": 7,
    "output_dir": "",
    "deterministic": True,
}


def make_config(tmp_path=None, **overrides) -> ExperimentConfig:
    mapping = dict(BASE_CONFIG)
    for key, value in overrides.items():
        mapping[key] = value
    if tmp_path is not None and "output_dir" not in overrides:
        mapping["output_dir"] = str(tmp_path / "out")
    return ExperimentConfig.from_mapping(mapping)


@pytest.fixture
def base_config(tmp_path):
    return make_config(tmp_path)
