"""On-disk formats: rasters, pulse dumps, edge-measurement dumps, dictionaries, checkpoints.

Everything binary is little-endian.  Complex values are stored as
interleaved real/imaginary 64-bit float pairs.  Readers report the byte
offset of any truncation or corruption.
"""

from __future__ import annotations

import struct
from typing import Iterable, Iterator, Tuple

import numpy as np

from .dictionary import EdgeletDictionary, EdgeletParams
from .edgefilter import EdgeMeasurement
from .errors import FormatError
from .forward import NoiseCovariance, PulseRecord
from .geometry import FrequencyGrid, ImagingGrid
from .solver import SufficientStats

PULSE_MAGIC = b"SEPD"
EDGE_MAGIC = b"SEED"
DICT_MAGIC = b"SEDI"
CHECKPOINT_MAGIC = b"SECK"
FORMAT_VERSION = 1

_COV_TAGS = {"noiseless": 0, "scaled_identity": 1, "diagonal": 2, "full": 3}
_COV_KINDS = {v: k for k, v in _COV_TAGS.items()}


# ---------------------------------------------------------------------------
# Rasters
# ---------------------------------------------------------------------------
def save_raster_csv(path, raster: np.ndarray) -> None:
    """Plain-text raster: one row per line, comma separated, full precision."""
    np.savetxt(path, np.atleast_2d(raster), delimiter=",", fmt="%.17g")


def load_raster_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=","))


def save_raster_binary(path, raster: np.ndarray) -> None:
    """8-byte header (n_x, n_y as uint32) then row-major float64 values."""
    raster = np.atleast_2d(np.asarray(raster, dtype=float))
    n_y, n_x = raster.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<II", n_x, n_y))
        f.write(raster.astype("<f8").tobytes())


def load_raster_binary(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = _read_exact(f, 8, "raster header")
        n_x, n_y = struct.unpack("<II", header)
        data = _read_exact(f, 8 * n_x * n_y, "raster values")
    return np.frombuffer(data, dtype="<f8").reshape(n_y, n_x).copy()


# ---------------------------------------------------------------------------
# Low-level helpers
# ---------------------------------------------------------------------------
def _read_exact(f, nbytes: int, what: str) -> bytes:
    offset = f.tell()
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise FormatError(f"truncated file while reading {what} at byte offset {offset}")
    return buf


def _write_complex(f, values: np.ndarray) -> None:
    f.write(np.ascontiguousarray(values, dtype="<c16").tobytes())


def _read_complex(f, count: int, what: str) -> np.ndarray:
    return np.frombuffer(_read_exact(f, 16 * count, what), dtype="<c16").copy()


def _write_covariance(f, cov: NoiseCovariance) -> None:
    f.write(struct.pack("<B", _COV_TAGS[cov.kind]))
    if cov.kind == "scaled_identity":
        f.write(struct.pack("<d", cov.sigma2))
    elif cov.kind == "diagonal":
        f.write(cov.variances.astype("<f8").tobytes())
    elif cov.kind == "full":
        _write_complex(f, cov.matrix_params.ravel())


def _read_covariance(f, dim: int) -> NoiseCovariance:
    (tag,) = struct.unpack("<B", _read_exact(f, 1, "covariance tag"))
    kind = _COV_KINDS.get(tag)
    if kind is None:
        raise FormatError(f"unknown covariance tag {tag} at byte offset {f.tell() - 1}")
    if kind == "noiseless":
        return NoiseCovariance.noiseless(dim)
    if kind == "scaled_identity":
        (sigma2,) = struct.unpack("<d", _read_exact(f, 8, "covariance sigma2"))
        return NoiseCovariance.scaled_identity(sigma2, dim)
    if kind == "diagonal":
        v = np.frombuffer(_read_exact(f, 8 * dim, "covariance diagonal"), dtype="<f8").copy()
        return NoiseCovariance.diagonal(v)
    m = _read_complex(f, dim * dim, "covariance matrix").reshape(dim, dim)
    return NoiseCovariance.full(m)


# ---------------------------------------------------------------------------
# Pulse dumps
# ---------------------------------------------------------------------------
def write_pulse_dump(path, freq_grid: FrequencyGrid, pulses: Iterable[PulseRecord]) -> int:
    """Stream pulse records to disk; the shared frequency grid lives in the header."""
    count = 0
    with open(path, "wb") as f:
        f.write(PULSE_MAGIC)
        f.write(struct.pack("<HI", FORMAT_VERSION, freq_grid.n_samples))
        f.write(freq_grid.omega.astype("<f8").tobytes())
        for rec in pulses:
            if rec.freq_grid.n_samples != freq_grid.n_samples or not np.array_equal(
                rec.freq_grid.omega, freq_grid.omega
            ):
                raise FormatError("pulse frequency grid does not match the dump header")
            f.write(struct.pack("<I", rec.slow_time_index))
            f.write(rec.platform_position.astype("<f8").tobytes())
            f.write(struct.pack("<I", rec.freq_grid.n_samples))
            _write_complex(f, rec.data)
            _write_covariance(f, rec.noise_cov)
            count += 1
    return count


def read_pulse_dump_header(path) -> FrequencyGrid:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "pulse dump magic")
        if magic != PULSE_MAGIC:
            raise FormatError(f"not a pulse dump (magic {magic!r})")
        version, n_r = struct.unpack("<HI", _read_exact(f, 6, "pulse dump header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported pulse dump version {version}")
        omega = np.frombuffer(_read_exact(f, 8 * n_r, "frequency samples"), dtype="<f8").copy()
    return FrequencyGrid(omega)


def iter_pulse_dump(path) -> Iterator[PulseRecord]:
    """Yield stored pulses in order; raises FormatError with the byte offset on corruption."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "pulse dump magic")
        if magic != PULSE_MAGIC:
            raise FormatError(f"not a pulse dump (magic {magic!r})")
        version, n_r = struct.unpack("<HI", _read_exact(f, 6, "pulse dump header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported pulse dump version {version}")
        omega = np.frombuffer(_read_exact(f, 8 * n_r, "frequency samples"), dtype="<f8").copy()
        freq_grid = FrequencyGrid(omega)
        while True:
            first = f.read(4)
            if not first:
                return  # clean end of file
            if len(first) != 4:
                raise FormatError(f"truncated file while reading pulse index at byte offset {f.tell() - len(first)}")
            (n,) = struct.unpack("<I", first)
            gamma = np.frombuffer(_read_exact(f, 24, "platform position"), dtype="<f8").copy()
            (rec_nr,) = struct.unpack("<I", _read_exact(f, 4, "sample count"))
            if rec_nr != n_r:
                raise FormatError(
                    f"pulse {n} sample count {rec_nr} does not match header {n_r} at byte offset {f.tell() - 4}"
                )
            data = _read_complex(f, n_r, f"pulse {n} data")
            cov = _read_covariance(f, n_r)
            yield PulseRecord(
                slow_time_index=n,
                platform_position=gamma,
                freq_grid=freq_grid,
                data=data,
                noise_cov=cov,
            )


# ---------------------------------------------------------------------------
# Edge-measurement dumps
# ---------------------------------------------------------------------------
def write_edge_dump(path, measurements: Iterable[EdgeMeasurement]) -> int:
    """Pulse-record layout plus the xi sample pairs and the Laplacian order."""
    count = 0
    n_r = None
    with open(path, "wb") as f:
        f.write(EDGE_MAGIC)
        header_pos = f.tell()
        f.write(struct.pack("<HI", FORMAT_VERSION, 0))
        for m in measurements:
            if n_r is None:
                n_r = m.data.size
            elif m.data.size != n_r:
                raise FormatError("edge measurements in one dump must share a sample count")
            f.write(struct.pack("<I", m.slow_time_index))
            f.write(struct.pack("<I", m.data.size))
            _write_complex(f, m.data)
            _write_covariance(f, m.noise_cov)
            f.write(np.ascontiguousarray(m.xi_points, dtype="<f8").tobytes())
            f.write(struct.pack("<d", m.laplacian_order))
            count += 1
        f.seek(header_pos)
        f.write(struct.pack("<HI", FORMAT_VERSION, 0 if n_r is None else n_r))
    return count


def iter_edge_dump(path) -> Iterator[EdgeMeasurement]:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "edge dump magic")
        if magic != EDGE_MAGIC:
            raise FormatError(f"not an edge-measurement dump (magic {magic!r})")
        version, n_r = struct.unpack("<HI", _read_exact(f, 6, "edge dump header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported edge dump version {version}")
        while True:
            first = f.read(4)
            if not first:
                return
            if len(first) != 4:
                raise FormatError(f"truncated file while reading edge record at byte offset {f.tell() - len(first)}")
            (n,) = struct.unpack("<I", first)
            (rec_nr,) = struct.unpack("<I", _read_exact(f, 4, "sample count"))
            if rec_nr != n_r:
                raise FormatError(f"edge record {n} sample count mismatch at byte offset {f.tell() - 4}")
            data = _read_complex(f, n_r, f"edge record {n} data")
            cov = _read_covariance(f, n_r)
            xi = np.frombuffer(_read_exact(f, 16 * n_r, "xi samples"), dtype="<f8").copy().reshape(n_r, 2)
            (p,) = struct.unpack("<d", _read_exact(f, 8, "laplacian order"))
            yield EdgeMeasurement(
                slow_time_index=n, xi_points=xi, data=data, laplacian_order=p, noise_cov=cov
            )


# ---------------------------------------------------------------------------
# Dictionary persistence
# ---------------------------------------------------------------------------
def save_dictionary(path, dictionary: EdgeletDictionary) -> None:
    grid = dictionary.grid
    with open(path, "wb") as f:
        f.write(DICT_MAGIC)
        f.write(struct.pack("<H", FORMAT_VERSION))
        f.write(struct.pack("<ddII", grid.extent_x, grid.extent_y, grid.n_x, grid.n_y))
        f.write(struct.pack("<II", dictionary.atoms.shape[0], dictionary.n_atoms))
        f.write(dictionary.atoms.ravel(order="F").astype("<f8").tobytes())
        for ap in dictionary.atom_params:
            f.write(struct.pack("<5d", *ap))


def load_dictionary(path) -> EdgeletDictionary:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "dictionary magic")
        if magic != DICT_MAGIC:
            raise FormatError(f"not a dictionary file (magic {magic!r})")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "dictionary version"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported dictionary version {version}")
        extent_x, extent_y, n_x, n_y = struct.unpack("<ddII", _read_exact(f, 24, "grid descriptor"))
        n_pix, n_atoms = struct.unpack("<II", _read_exact(f, 8, "dictionary shape"))
        atoms = (
            np.frombuffer(_read_exact(f, 8 * n_pix * n_atoms, "atom matrix"), dtype="<f8")
            .reshape(n_pix, n_atoms, order="F")
            .copy()
        )
        params = []
        for _ in range(n_atoms):
            params.append(EdgeletParams(*struct.unpack("<5d", _read_exact(f, 40, "atom params"))))
    grid = ImagingGrid(extent_x=extent_x, extent_y=extent_y, n_x=n_x, n_y=n_y)
    return EdgeletDictionary(grid=grid, atoms=atoms, atom_params=tuple(params))


# ---------------------------------------------------------------------------
# Solver checkpoints
# ---------------------------------------------------------------------------
def save_checkpoint(path, stats: SufficientStats, lam: float, c: np.ndarray) -> None:
    """Everything needed to resume: (A, b, e, n, lambda, current coefficients)."""
    c = np.asarray(c).ravel()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<HIId", FORMAT_VERSION, stats.dim, stats.pulse_count, lam))
        _write_complex(f, stats.A.ravel(order="F"))
        _write_complex(f, stats.b)
        f.write(struct.pack("<d", stats.data_energy))
        _write_complex(f, c.astype(complex))


def load_checkpoint(path) -> Tuple[SufficientStats, float, np.ndarray]:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "checkpoint magic")
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"not a checkpoint file (magic {magic!r})")
        version, dim, count, lam = struct.unpack("<HIId", _read_exact(f, 18, "checkpoint header"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        stats = SufficientStats(dim)
        stats.A = _read_complex(f, dim * dim, "checkpoint A").reshape(dim, dim, order="F")
        stats.b = _read_complex(f, dim, "checkpoint b")
        (stats.data_energy,) = struct.unpack("<d", _read_exact(f, 8, "checkpoint energy"))
        stats.pulse_count = count
        c = _read_complex(f, dim, "checkpoint coefficients")
    return stats, lam, c
