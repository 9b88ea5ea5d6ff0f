"""Fast-time frequency-domain pulse simulation and the discrete forward map.

Two simulators are provided: the exact two-way-range model, and the
far-field model obtained by linearizing the range about the scene center.
The far-field model is what the discrete forward matrix realizes; after
phase compensation the exact model converges to it as the standoff grows.

All simulation happens directly in the fast-time frequency domain: every
downstream consumer works on frequency samples, so synthesizing time-domain
echoes only to transform them back would add an FFT pair with no users.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import GeometryError, NumericalError
from .geometry import (
    SPEED_OF_LIGHT,
    FrequencyGrid,
    GroundScene,
    ImagingGrid,
    PlatformTrajectory,
    xi_samples_for_position,
)

_HERMITIAN_RTOL = 1e-10


# ---------------------------------------------------------------------------
# Noise covariance
# ---------------------------------------------------------------------------
class NoiseCovariance:
    """Second-order description of one pulse's additive noise.

    Noise is circularly-symmetric complex Gaussian, so the covariance is
    the full description.  Three positive-definite representations are
    supported (scaled identity, diagonal, full Hermitian) plus an explicit
    ``noiseless`` tag.  A noiseless pulse adds no noise and weighs as the
    identity in the solver's weighted norm.

    Use the classmethod constructors; they validate positive definiteness.
    """

    def __init__(self, kind: str, dim: int, params):
        self.kind = kind
        self.dim = int(dim)
        self._params = params
        self._chol: Optional[np.ndarray] = None
        if kind == "full":
            # Cholesky doubles as the positive-definiteness check.
            try:
                self._chol = np.linalg.cholesky(params)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("full covariance is not positive definite") from exc

    # --- constructors ---
    @classmethod
    def noiseless(cls, dim: int) -> "NoiseCovariance":
        return cls("noiseless", dim, None)

    @classmethod
    def scaled_identity(cls, sigma2: float, dim: int) -> "NoiseCovariance":
        if sigma2 <= 0:
            raise NumericalError("scaled-identity covariance needs sigma2 > 0 (use noiseless() for zero noise)")
        return cls("scaled_identity", dim, float(sigma2))

    @classmethod
    def diagonal(cls, variances) -> "NoiseCovariance":
        v = np.asarray(variances, dtype=float).ravel()
        if np.any(v <= 0):
            raise NumericalError("diagonal covariance entries must be positive")
        return cls("diagonal", v.size, v)

    @classmethod
    def full(cls, matrix) -> "NoiseCovariance":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NumericalError("full covariance must be square")
        scale = max(float(np.linalg.norm(m)), 1.0)
        if np.linalg.norm(m - m.conj().T) > _HERMITIAN_RTOL * scale:
            raise NumericalError("full covariance is not Hermitian")
        return cls("full", m.shape[0], m)

    # --- queries ---
    @property
    def sigma2(self) -> float:
        if self.kind != "scaled_identity":
            raise NumericalError(f"covariance kind {self.kind!r} has no scalar sigma2")
        return self._params

    @property
    def variances(self) -> np.ndarray:
        if self.kind != "diagonal":
            raise NumericalError(f"covariance kind {self.kind!r} has no diagonal variances")
        return self._params

    @property
    def matrix_params(self) -> np.ndarray:
        if self.kind != "full":
            raise NumericalError(f"covariance kind {self.kind!r} has no full matrix")
        return self._params

    def matrix(self) -> np.ndarray:
        """Dense covariance (identity for the noiseless tag)."""
        if self.kind == "noiseless":
            return np.eye(self.dim, dtype=complex)
        if self.kind == "scaled_identity":
            return self._params * np.eye(self.dim, dtype=complex)
        if self.kind == "diagonal":
            return np.diag(self._params).astype(complex)
        return np.array(self._params)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the inverse covariance via factorization, never an explicit inverse.

        The noiseless tag weighs as the identity.
        """
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.dim:
            raise NumericalError(f"covariance dim {self.dim} does not match data length {rhs.shape[0]}")
        if self.kind == "noiseless":
            return rhs.astype(complex)
        if self.kind == "scaled_identity":
            return rhs / self._params
        if self.kind == "diagonal":
            return rhs / (self._params[:, None] if rhs.ndim == 2 else self._params)
        return scipy.linalg.cho_solve((self._chol, True), rhs)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one circularly-symmetric complex Gaussian vector with this covariance."""
        z = (rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)) / np.sqrt(2.0)
        if self.kind == "noiseless":
            return np.zeros(self.dim, dtype=complex)
        if self.kind == "scaled_identity":
            return np.sqrt(self._params) * z
        if self.kind == "diagonal":
            return np.sqrt(self._params) * z
        return self._chol @ z

    def transformed(self, weights: np.ndarray) -> "NoiseCovariance":
        """Covariance of ``diag(weights) @ data`` for real nonnegative weights.

        Zero weights would make the result singular and are rejected; the
        noiseless tag passes through unchanged.
        """
        w = np.asarray(weights, dtype=float).ravel()
        if w.size != self.dim:
            raise NumericalError("weight vector length does not match covariance dim")
        if self.kind == "noiseless":
            return NoiseCovariance.noiseless(self.dim)
        if np.any(w <= 0):
            raise NumericalError("zero edge-filter weight would make the covariance singular")
        if self.kind == "scaled_identity":
            return NoiseCovariance.diagonal(self._params * w**2)
        if self.kind == "diagonal":
            return NoiseCovariance.diagonal(self._params * w**2)
        return NoiseCovariance.full(w[:, None] * self._params * w[None, :])


# ---------------------------------------------------------------------------
# Pulse records and the forward matrix
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PulseRecord:
    """One slow-time measurement: raw (uncompensated) frequency-domain data."""

    slow_time_index: int
    platform_position: np.ndarray  # (3,)
    freq_grid: FrequencyGrid
    data: np.ndarray  # complex, length n_samples
    noise_cov: NoiseCovariance

    def __post_init__(self):
        pos = np.asarray(self.platform_position, dtype=float).ravel()
        if pos.shape != (3,):
            raise GeometryError("platform position must be a 3-vector")
        data = np.asarray(self.data, dtype=complex).ravel()
        if data.size != self.freq_grid.n_samples:
            raise GeometryError(
                f"pulse data length {data.size} does not match frequency grid {self.freq_grid.n_samples}"
            )
        if self.noise_cov.dim != data.size:
            raise GeometryError("noise covariance dimension does not match pulse data length")
        pos.flags.writeable = False
        data.flags.writeable = False
        object.__setattr__(self, "platform_position", pos)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class ForwardMatrix:
    """Discrete far-field forward map for one pulse.

    Entry ``(m, i)`` is ``exp(-1j * x_i . xi_m) * pixel_area``: a pure phase
    times the quadrature weight that makes the matrix a Riemann-sum
    discretization of the continuous transform.
    """

    entries: np.ndarray  # (n_freq, n_pixels) complex
    pulse_index: int
    grid_shape: tuple  # (n_y, n_x)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def shape(self) -> tuple:
        return self.entries.shape


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------
def simulate_pulse_exact(
    scene: GroundScene, traj: PlatformTrajectory, n: int, freq_grid: FrequencyGrid
) -> np.ndarray:
    """Backscatter with the exact two-way range, no phase compensation.

    Sample ``m`` is ``sum_i rho(x_i) * exp(+1j * (2 w_m / c) * |gamma - x_i|)``
    times the pixel area.  The positive range phase is what the oscillatory
    model with travel-time phase ``t - (2/c) |gamma - x|`` produces for the
    frequency-domain coefficient; it is the convention under which phase
    compensation lands exactly on the ``exp(-1j x . xi)`` scene transform.
    """
    pos = traj.position(n)
    ranges = np.linalg.norm(scene.scatterer_positions_3d() - pos[None, :], axis=1)
    wavenumbers = 2.0 * freq_grid.omega / SPEED_OF_LIGHT  # (n_freq,)
    phases = np.exp(1j * wavenumbers[:, None] * ranges[None, :])
    return (phases @ scene.reflectivity_vector) * scene.grid.pixel_area


def compensate_phase(
    raw: np.ndarray, traj: PlatformTrajectory, n: int, freq_grid: FrequencyGrid
) -> np.ndarray:
    """Reference the pulse phase to the scene center.

    Multiplies sample ``m`` by ``exp(-1j * (2 w_m / c) * |gamma|)``, cancelling
    the center-of-scene range phase so the result approximates the scene
    transform sampled at ``xi_m`` (exactly, in the far-field limit).
    """
    raw = np.asarray(raw, dtype=complex).ravel()
    if raw.size != freq_grid.n_samples:
        raise GeometryError(
            f"data length {raw.size} does not match frequency grid {freq_grid.n_samples}"
        )
    rng = float(np.linalg.norm(traj.position(n)))
    return raw * np.exp(-1j * (2.0 * freq_grid.omega / SPEED_OF_LIGHT) * rng)


def build_forward_matrix(
    grid: ImagingGrid, traj: PlatformTrajectory, n: int, freq_grid: FrequencyGrid
) -> ForwardMatrix:
    """Far-field forward map at pulse ``n``; row ``m`` samples the scene at ``xi_m``."""
    return forward_matrix_at(grid, traj.position(n), freq_grid, pulse_index=n)


def forward_matrix_at(
    grid: ImagingGrid, position: np.ndarray, freq_grid: FrequencyGrid, pulse_index: int = 0
) -> ForwardMatrix:
    """Forward map from a raw platform position (replay path, no trajectory)."""
    xi = xi_samples_for_position(freq_grid, position)  # (n_freq, 2)
    phases = grid.pixel_centers @ xi.T  # (n_pixels, n_freq)
    entries = np.exp(-1j * phases.T) * grid.pixel_area
    return ForwardMatrix(entries=entries, pulse_index=pulse_index, grid_shape=(grid.n_y, grid.n_x))


def simulate_pulse_farfield(
    scene: GroundScene, traj: PlatformTrajectory, n: int, freq_grid: FrequencyGrid
) -> np.ndarray:
    """Phase-compensated backscatter under the far-field approximation.

    Exactly the forward matrix applied to the reflectivity; agrees with
    ``compensate_phase(simulate_pulse_exact(...))`` up to a phase error
    that shrinks as range / scene diameter grows.
    """
    fwd = build_forward_matrix(scene.grid, traj, n, freq_grid)
    return fwd.entries @ scene.reflectivity_vector


def add_noise(data: np.ndarray, cov: NoiseCovariance, rng_seed: int) -> np.ndarray:
    """Add one circular complex Gaussian draw; deterministic for a given seed."""
    data = np.asarray(data, dtype=complex).ravel()
    if data.size != cov.dim:
        raise NumericalError(f"covariance dim {cov.dim} does not match data length {data.size}")
    rng = np.random.default_rng(rng_seed)
    return data + cov.sample(rng)
