"""Edge enhancement in the spatial-frequency domain.

A phase-compensated pulse samples the scene's 2D transform along a radial
line of spatial frequencies.  Multiplying each sample by ``|xi|^p`` turns
those samples into samples of the transform of the edge-enhanced scene,
so edge mapping never requires forming an image.  The module also provides
the grid-domain reference edge map used as the oracle target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import EdgeletDictionary
from .errors import GeometryError, SarEdgeError
from .forward import NoiseCovariance, PulseRecord, compensate_phase
from .geometry import GroundScene, ImagingGrid, PlatformTrajectory, xi_samples_for_position


@dataclass(frozen=True)
class EdgeMeasurement:
    """One pulse after phase compensation and Laplacian weighting."""

    slow_time_index: int
    xi_points: np.ndarray  # (n_samples, 2), rad/m
    data: np.ndarray  # complex, length n_samples
    laplacian_order: float
    noise_cov: NoiseCovariance  # covariance of the weighted data

    def __post_init__(self):
        xi = np.asarray(self.xi_points, dtype=float)
        data = np.asarray(self.data, dtype=complex).ravel()
        if xi.ndim != 2 or xi.shape[1] != 2:
            raise GeometryError("xi_points must be an (n_samples, 2) array")
        if xi.shape[0] != data.size:
            raise GeometryError("xi_points and data lengths differ")
        if self.laplacian_order < 1:
            raise SarEdgeError("laplacian order p must be >= 1")
        xi.flags.writeable = False
        data.flags.writeable = False
        object.__setattr__(self, "xi_points", xi)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class EdgeMap:
    """Edge-enhanced reflectivity raster on an imaging grid."""

    grid: ImagingGrid
    values: np.ndarray  # (n_y, n_x), real
    imag_residual: float = 0.0  # norm of any imaginary part discarded on synthesis

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_y, self.grid.n_x):
            raise GeometryError(
                f"edge map shape {v.shape} does not match grid ({self.grid.n_y}, {self.grid.n_x})"
            )
        if not np.all(np.isfinite(v)):
            raise GeometryError("edge map contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def vector(self) -> np.ndarray:
        return self.values.ravel()


def edge_weights(xi_points: np.ndarray, p: float) -> np.ndarray:
    """Laplacian weights ``|xi_m|^p`` for a set of spatial-frequency samples."""
    if p < 1:
        raise SarEdgeError(f"laplacian order p must be >= 1, got {p}")
    xi = np.asarray(xi_points, dtype=float)
    return np.linalg.norm(xi, axis=1) ** p


def apply_edge_filter(dtilde: np.ndarray, xi_points: np.ndarray, p: float) -> np.ndarray:
    """Weight each compensated sample by ``|xi_m|^p``; a zero-frequency sample maps to exactly 0."""
    dtilde = np.asarray(dtilde, dtype=complex).ravel()
    xi = np.asarray(xi_points, dtype=float)
    if xi.shape[0] != dtilde.size:
        raise SarEdgeError("xi_points and data lengths differ")
    return dtilde * edge_weights(xi, p)


def filter_pulse(record: PulseRecord, traj: PlatformTrajectory, p: float) -> EdgeMeasurement:
    """Convert a raw pulse into an edge-enhanced measurement.

    Compensates the center-of-scene phase, weights by ``|xi|^p``, and
    transforms the noise covariance consistently with the weighting so the
    solver's weighted norm stays statistically correct.  The record's
    stored platform position must match the trajectory.
    """
    pos = traj.position(record.slow_time_index)
    if not np.allclose(pos, record.platform_position, rtol=0.0, atol=1e-9):
        raise GeometryError(
            f"pulse {record.slow_time_index} position does not match the trajectory"
        )
    return edge_measurement_from_record(record, p)


def edge_measurement_from_record(record: PulseRecord, p: float) -> EdgeMeasurement:
    """Edge-filter a pulse using only its own stored geometry (replay path)."""
    single = PlatformTrajectory(record.platform_position[None, :])
    dtilde = compensate_phase(record.data, single, 0, record.freq_grid)
    xi = xi_samples_for_position(record.freq_grid, record.platform_position)
    weights = edge_weights(xi, p)
    return EdgeMeasurement(
        slow_time_index=record.slow_time_index,
        xi_points=xi,
        data=dtilde * weights,
        laplacian_order=p,
        noise_cov=record.noise_cov.transformed(weights),
    )


def reference_edge_map(scene: GroundScene, p: float) -> EdgeMap:
    """Grid-domain oracle: filter the whole scene by ``|xi|^p`` in 2D frequency space.

    Works on the scene's DFT with physical (rad/m) frequency coordinates;
    the DC bin is zeroed exactly, so the output always has zero mean.
    Requires even sample counts for unambiguous frequency indexing.
    """
    if p < 1:
        raise SarEdgeError(f"laplacian order p must be >= 1, got {p}")
    grid = scene.grid
    if grid.n_x % 2 or grid.n_y % 2:
        raise GeometryError("reference edge map needs even grid sample counts")
    kx = 2.0 * np.pi * np.fft.fftfreq(grid.n_x, d=grid.spacing_x)
    ky = 2.0 * np.pi * np.fft.fftfreq(grid.n_y, d=grid.spacing_y)
    kmag = np.hypot(kx[None, :], ky[:, None])
    weights = kmag**p
    weights[0, 0] = 0.0
    filtered = np.fft.ifft2(np.fft.fft2(scene.reflectivity) * weights)
    return EdgeMap(grid=grid, values=filtered.real)


def edge_map_from_coefficients(dictionary: EdgeletDictionary, c: np.ndarray) -> EdgeMap:
    """Synthesize an edge map from dictionary coefficients.

    Takes the real part; the norm of any discarded imaginary part is kept
    on the result as a diagnostic.
    """
    c = np.asarray(c).ravel()
    if c.size != dictionary.n_atoms:
        raise SarEdgeError(
            f"coefficient length {c.size} does not match dictionary atom count {dictionary.n_atoms}"
        )
    synth = dictionary.atoms @ c
    grid = dictionary.grid
    values = np.real(synth).reshape(grid.n_y, grid.n_x)
    residual = float(np.linalg.norm(np.imag(synth)))
    return EdgeMap(grid=grid, values=values, imag_residual=residual)
