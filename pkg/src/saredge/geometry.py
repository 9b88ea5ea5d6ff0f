"""Scenes, imaging grids, platform trajectories, and spatial-frequency geometry.

Coordinate conventions used throughout the package:

* The scene lies in the ``z = 0`` plane with the origin at the scene
  center.  Pixel centers are symmetric about the origin.
* Rasters are stored as ``(n_y, n_x)`` arrays; the flattened (row-major)
  index ``i = iy * n_x + ix`` is the pixel ordering every matrix uses.
* The platform moves in 3D; look directions are horizontal projections
  of the platform position (ground topography is identically zero).
* Spatial frequencies ``xi`` are angular (rad/m): a fast-time angular
  frequency ``omega`` maps to ``xi = (2 * omega / c) * look_direction``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import GeometryError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Range must exceed this multiple of the scene diameter unless overridden;
# keeps the first-order phase expansion honest at desk scale.
DEFAULT_FAR_FIELD_RATIO = 10.0


# ---------------------------------------------------------------------------
# Imaging grid and scenes
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ImagingGrid:
    """Regular pixel grid centered on the origin.

    Parameters
    ----------
    extent_x, extent_y : float
        Scene half-widths in meters; pixels cover ``[-extent, extent]``.
    n_x, n_y : int
        Pixel counts per axis.
    """

    extent_x: float
    extent_y: float
    n_x: int
    n_y: int

    def __post_init__(self):
        if self.extent_x <= 0 or self.extent_y <= 0:
            raise GeometryError("grid extents must be positive")
        if self.n_x < 1 or self.n_y < 1:
            raise GeometryError("grid pixel counts must be >= 1")

    @property
    def n_pixels(self) -> int:
        return self.n_x * self.n_y

    @property
    def spacing_x(self) -> float:
        return 2.0 * self.extent_x / self.n_x

    @property
    def spacing_y(self) -> float:
        return 2.0 * self.extent_y / self.n_y

    @property
    def pixel_area(self) -> float:
        return self.spacing_x * self.spacing_y

    @property
    def diameter(self) -> float:
        """Diagonal extent of the scene footprint in meters."""
        return 2.0 * float(np.hypot(self.extent_x, self.extent_y))

    @cached_property
    def x_coords(self) -> np.ndarray:
        x = (np.arange(self.n_x) - (self.n_x - 1) / 2.0) * self.spacing_x
        x.flags.writeable = False
        return x

    @cached_property
    def y_coords(self) -> np.ndarray:
        y = (np.arange(self.n_y) - (self.n_y - 1) / 2.0) * self.spacing_y
        y.flags.writeable = False
        return y

    @cached_property
    def pixel_centers(self) -> np.ndarray:
        """All pixel centers as an ``(n_pixels, 2)`` array, row-major order."""
        xg, yg = np.meshgrid(self.x_coords, self.y_coords)
        centers = np.column_stack([xg.ravel(), yg.ravel()])
        centers.flags.writeable = False
        return centers


# --- scene primitives ------------------------------------------------------
@dataclass(frozen=True)
class PointTarget:
    """Single-pixel scatterer; snaps to the nearest pixel center.

    Ties between equidistant pixels resolve to the lowest row-major index.
    """

    x: float
    y: float
    amplitude: float = 1.0

    def within(self, grid: ImagingGrid) -> bool:
        return abs(self.x) <= grid.extent_x and abs(self.y) <= grid.extent_y

    def paint(self, raster: np.ndarray, grid: ImagingGrid) -> None:
        d2 = (grid.pixel_centers[:, 0] - self.x) ** 2 + (grid.pixel_centers[:, 1] - self.y) ** 2
        raster.flat[int(np.argmin(d2))] = self.amplitude


@dataclass(frozen=True)
class Disc:
    """Filled disc; a pixel belongs to it when its center does."""

    x: float
    y: float
    radius: float
    amplitude: float = 1.0

    def within(self, grid: ImagingGrid) -> bool:
        return (
            self.radius > 0
            and abs(self.x) + self.radius <= grid.extent_x
            and abs(self.y) + self.radius <= grid.extent_y
        )

    def paint(self, raster: np.ndarray, grid: ImagingGrid) -> None:
        xg, yg = np.meshgrid(grid.x_coords, grid.y_coords)
        mask = (xg - self.x) ** 2 + (yg - self.y) ** 2 <= self.radius**2
        raster[mask] = self.amplitude


@dataclass(frozen=True)
class Rectangle:
    """Filled axis-aligned rectangle given by center and full side lengths."""

    x: float
    y: float
    width: float
    height: float
    amplitude: float = 1.0

    def within(self, grid: ImagingGrid) -> bool:
        return (
            self.width > 0
            and self.height > 0
            and abs(self.x) + self.width / 2.0 <= grid.extent_x
            and abs(self.y) + self.height / 2.0 <= grid.extent_y
        )

    def paint(self, raster: np.ndarray, grid: ImagingGrid) -> None:
        xg, yg = np.meshgrid(grid.x_coords, grid.y_coords)
        mask = (np.abs(xg - self.x) <= self.width / 2.0) & (np.abs(yg - self.y) <= self.height / 2.0)
        raster[mask] = self.amplitude


ScenePrimitive = Union[PointTarget, Disc, Rectangle]


@dataclass(frozen=True)
class GroundScene:
    """Discretized reflectivity on an imaging grid; topography is flat zero."""

    grid: ImagingGrid
    reflectivity: np.ndarray  # (n_y, n_x), real-valued

    def __post_init__(self):
        refl = np.asarray(self.reflectivity, dtype=float)
        if refl.shape != (self.grid.n_y, self.grid.n_x):
            raise GeometryError(
                f"reflectivity shape {refl.shape} does not match grid ({self.grid.n_y}, {self.grid.n_x})"
            )
        if not np.all(np.isfinite(refl)):
            raise GeometryError("reflectivity contains non-finite values")
        refl.flags.writeable = False
        object.__setattr__(self, "reflectivity", refl)

    @property
    def reflectivity_vector(self) -> np.ndarray:
        """Reflectivity flattened to length ``n_pixels`` in row-major order."""
        return self.reflectivity.ravel()

    def scatterer_positions_3d(self) -> np.ndarray:
        """Pixel centers lifted to 3D with zero topography, ``(n_pixels, 3)``."""
        centers = self.grid.pixel_centers
        return np.column_stack([centers, np.zeros(len(centers))])


def make_synthetic_scene(grid: ImagingGrid, primitives: Sequence[ScenePrimitive]) -> GroundScene:
    """Rasterize a list of primitives onto the grid.

    Primitives are painted in order; later ones overwrite earlier ones.
    A primitive extending past the grid extent is rejected.
    """
    for k, prim in enumerate(primitives):
        if not prim.within(grid):
            raise GeometryError(f"primitive {k} ({prim!r}) extends outside the grid extent")
    raster = np.zeros((grid.n_y, grid.n_x))
    for prim in primitives:
        prim.paint(raster, grid)
    return GroundScene(grid=grid, reflectivity=raster)


# ---------------------------------------------------------------------------
# Platform trajectory
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PlatformTrajectory:
    """Ordered platform positions, one per slow-time pulse.

    ``scene_diameter`` (when positive) enforces the far-field standoff:
    every range must be at least ``far_field_ratio`` times the diameter.
    """

    positions: np.ndarray  # (n_pulses, 3), meters
    scene_diameter: float = 0.0
    far_field_ratio: float = DEFAULT_FAR_FIELD_RATIO

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise GeometryError("trajectory positions must be an (n_pulses, 3) array")
        ranges = np.linalg.norm(pos, axis=1)
        if np.any(ranges == 0.0):
            raise GeometryError("trajectory passes through the scene center (zero range)")
        if self.scene_diameter > 0:
            min_range = self.far_field_ratio * self.scene_diameter
            if np.any(ranges < min_range):
                worst = int(np.argmin(ranges))
                raise GeometryError(
                    f"pulse {worst} range {ranges[worst]:.3g} m violates the far-field "
                    f"standoff {min_range:.3g} m ({self.far_field_ratio:g} x diameter)"
                )
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n_pulses(self) -> int:
        return self.positions.shape[0]

    def position(self, n: int) -> np.ndarray:
        if not 0 <= n < self.n_pulses:
            raise GeometryError(f"pulse index {n} out of range [0, {self.n_pulses})")
        return self.positions[n]


def make_circular_trajectory(
    radius: float,
    altitude: float,
    n_pulses: int,
    angular_extent: float = 2.0 * np.pi,
    start_angle: float = 0.0,
    scene_diameter: float = 0.0,
    far_field_ratio: float = DEFAULT_FAR_FIELD_RATIO,
) -> PlatformTrajectory:
    """Arc of constant horizontal radius and altitude around the scene center.

    Pulse angles are evenly spaced over ``angular_extent`` with the end
    angle excluded, so a full circle has no duplicate look direction.
    """
    if radius <= 0:
        raise GeometryError("circular trajectory needs a positive horizontal radius")
    if n_pulses < 1:
        raise GeometryError("trajectory needs at least one pulse")
    angles = start_angle + angular_extent * np.arange(n_pulses) / n_pulses
    positions = np.column_stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.full(n_pulses, float(altitude))]
    )
    return PlatformTrajectory(positions, scene_diameter, far_field_ratio)


def make_linear_trajectory(
    start: Sequence[float],
    stop: Sequence[float],
    n_pulses: int,
    scene_diameter: float = 0.0,
    far_field_ratio: float = DEFAULT_FAR_FIELD_RATIO,
) -> PlatformTrajectory:
    """Straight flight path sampled uniformly from ``start`` to ``stop``."""
    if n_pulses < 1:
        raise GeometryError("trajectory needs at least one pulse")
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    if start.shape != (3,) or stop.shape != (3,):
        raise GeometryError("linear trajectory endpoints must be 3-vectors")
    frac = np.arange(n_pulses) / max(n_pulses - 1, 1)
    positions = start[None, :] + frac[:, None] * (stop - start)[None, :]
    return PlatformTrajectory(positions, scene_diameter, far_field_ratio)


# ---------------------------------------------------------------------------
# Fast-time frequency grid
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive fast-time angular frequencies (rad/s)."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).ravel()
        if w.size < 1:
            raise GeometryError("frequency grid needs at least one sample")
        if np.any(w <= 0):
            raise GeometryError("all angular frequencies must be positive")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise GeometryError("angular frequencies must be strictly increasing")
        w.flags.writeable = False
        object.__setattr__(self, "omega", w)

    @property
    def n_samples(self) -> int:
        return self.omega.size

    @property
    def center(self) -> float:
        """Midpoint of the sampled band, rad/s."""
        return 0.5 * float(self.omega[0] + self.omega[-1])

    @property
    def bandwidth(self) -> float:
        """Sampled band width, rad/s."""
        return float(self.omega[-1] - self.omega[0])

    @classmethod
    def from_band(cls, center_hz: float, bandwidth_hz: float, n_samples: int) -> "FrequencyGrid":
        """Uniform grid over ``center_hz +/- bandwidth_hz / 2`` (plain Hz in, rad/s out)."""
        if n_samples == 1:
            freqs = np.array([center_hz], dtype=float)
        else:
            freqs = center_hz + np.linspace(-0.5, 0.5, n_samples) * bandwidth_hz
        return cls(2.0 * np.pi * freqs)


# ---------------------------------------------------------------------------
# Look directions and spatial-frequency samples
# ---------------------------------------------------------------------------
def _horizontal_unit(position: np.ndarray) -> np.ndarray:
    rng = float(np.linalg.norm(position))
    if rng == 0.0:
        raise GeometryError("platform position has zero range")
    return np.array([position[0] / rng, position[1] / rng, 0.0])


def unit_look_direction(traj: PlatformTrajectory, n: int) -> np.ndarray:
    """Horizontal projection of the platform direction at pulse ``n``.

    Returns ``[g1 / r, g2 / r, 0]`` where ``r`` is the full 3D range, so the
    2D part has norm <= 1 with equality only at zero altitude.
    """
    return _horizontal_unit(traj.position(n))


def xi_sample(omega: float, traj: PlatformTrajectory, n: int) -> np.ndarray:
    """Spatial-frequency sample (rad/m) for one fast-time frequency and pulse."""
    if omega <= 0:
        raise GeometryError("omega must be positive")
    look = unit_look_direction(traj, n)
    return (2.0 * omega / SPEED_OF_LIGHT) * look[:2]


def xi_samples(freq_grid: FrequencyGrid, traj: PlatformTrajectory, n: int) -> np.ndarray:
    """All spatial-frequency samples for one pulse, ``(n_samples, 2)``."""
    look = unit_look_direction(traj, n)
    return (2.0 * freq_grid.omega / SPEED_OF_LIGHT)[:, None] * look[None, :2]


def xi_samples_for_position(freq_grid: FrequencyGrid, position: np.ndarray) -> np.ndarray:
    """Spatial-frequency samples from a raw platform position (no trajectory)."""
    look = _horizontal_unit(np.asarray(position, dtype=float))
    return (2.0 * freq_grid.omega / SPEED_OF_LIGHT)[:, None] * look[None, :2]
