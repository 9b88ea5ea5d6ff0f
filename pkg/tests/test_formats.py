import numpy as np
import pytest

from saredge.dictionary import build_edgelet_dictionary
from saredge.edgefilter import EdgeMeasurement
from saredge.errors import FormatError
from saredge.formats import (
    iter_edge_dump,
    iter_pulse_dump,
    load_checkpoint,
    load_dictionary,
    load_raster_binary,
    load_raster_csv,
    read_pulse_dump_header,
    save_checkpoint,
    save_dictionary,
    save_raster_binary,
    save_raster_csv,
    write_edge_dump,
    write_pulse_dump,
)
from saredge.forward import NoiseCovariance, PulseRecord
from saredge.geometry import FrequencyGrid, ImagingGrid
from saredge.solver import SufficientStats


@pytest.fixture
def freq_grid():
    return FrequencyGrid.from_band(2e7, 1e7, 6)


def make_records(freq_grid, count=4):
    rng = np.random.default_rng(0)
    records = []
    covs = [
        NoiseCovariance.noiseless(6),
        NoiseCovariance.scaled_identity(0.5, 6),
        NoiseCovariance.diagonal(rng.uniform(0.5, 2.0, 6)),
    ]
    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    covs.append(NoiseCovariance.full(m @ m.conj().T + 6 * np.eye(6)))
    for n in range(count):
        records.append(
            PulseRecord(
                slow_time_index=n,
                platform_position=rng.uniform(50, 100, 3),
                freq_grid=freq_grid,
                data=rng.standard_normal(6) + 1j * rng.standard_normal(6),
                noise_cov=covs[n % len(covs)],
            )
        )
    return records


class TestRasters:
    def test_csv_round_trip(self, tmp_path):
        raster = np.random.default_rng(1).standard_normal((5, 7))
        path = tmp_path / "r.csv"
        save_raster_csv(path, raster)
        assert np.array_equal(load_raster_csv(path), raster)

    def test_binary_round_trip_and_header(self, tmp_path):
        raster = np.random.default_rng(2).standard_normal((4, 9))
        path = tmp_path / "r.bin"
        save_raster_binary(path, raster)
        back = load_raster_binary(path)
        assert back.shape == (4, 9)
        assert np.array_equal(back, raster)
        # 8-byte header: n_x then n_y as uint32 little-endian
        head = path.read_bytes()[:8]
        assert int.from_bytes(head[:4], "little") == 9
        assert int.from_bytes(head[4:], "little") == 4

    def test_truncated_binary_reports_offset(self, tmp_path):
        path = tmp_path / "r.bin"
        save_raster_binary(path, np.ones((3, 3)))
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(FormatError, match="offset"):
            load_raster_binary(path)


class TestPulseDump:
    def test_round_trip_bit_identical(self, tmp_path, freq_grid):
        records = make_records(freq_grid)
        path = tmp_path / "pulses.bin"
        assert write_pulse_dump(path, freq_grid, records) == 4
        back = list(iter_pulse_dump(path))
        assert len(back) == 4
        for orig, rec in zip(records, back):
            assert rec.slow_time_index == orig.slow_time_index
            assert np.array_equal(rec.platform_position, orig.platform_position)
            assert np.array_equal(rec.data, orig.data)
            assert np.array_equal(rec.freq_grid.omega, freq_grid.omega)
            assert rec.noise_cov.kind == orig.noise_cov.kind
            assert np.allclose(rec.noise_cov.matrix(), orig.noise_cov.matrix())

    def test_header_reader(self, tmp_path, freq_grid):
        path = tmp_path / "pulses.bin"
        write_pulse_dump(path, freq_grid, make_records(freq_grid, 1))
        assert np.array_equal(read_pulse_dump_header(path).omega, freq_grid.omega)

    def test_truncated_record_reports_offset(self, tmp_path, freq_grid):
        path = tmp_path / "pulses.bin"
        write_pulse_dump(path, freq_grid, make_records(freq_grid, 2))
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 11])
        reader = iter_pulse_dump(path)
        next(reader)
        with pytest.raises(FormatError, match="byte offset"):
            list(reader)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            next(iter_pulse_dump(path))

    def test_mismatched_grid_rejected_on_write(self, tmp_path, freq_grid):
        other = FrequencyGrid.from_band(5e7, 1e7, 6)
        records = make_records(other, 1)
        with pytest.raises(FormatError):
            write_pulse_dump(tmp_path / "x.bin", freq_grid, records)


class TestEdgeDump:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        measurements = [
            EdgeMeasurement(
                slow_time_index=n,
                xi_points=rng.standard_normal((5, 2)),
                data=rng.standard_normal(5) + 1j * rng.standard_normal(5),
                laplacian_order=2.0,
                noise_cov=NoiseCovariance.diagonal(rng.uniform(0.5, 1.5, 5)),
            )
            for n in range(3)
        ]
        path = tmp_path / "edges.bin"
        assert write_edge_dump(path, measurements) == 3
        back = list(iter_edge_dump(path))
        for orig, rec in zip(measurements, back):
            assert np.array_equal(rec.data, orig.data)
            assert np.array_equal(rec.xi_points, orig.xi_points)
            assert rec.laplacian_order == 2.0


class TestDictionaryPersistence:
    def test_round_trip(self, tmp_path):
        d = build_edgelet_dictionary(ImagingGrid(0.4, 0.5, 12, 16), 3, 2, 4)
        path = tmp_path / "dict.bin"
        save_dictionary(path, d)
        back = load_dictionary(path)
        assert np.array_equal(back.atoms, d.atoms)
        assert back.atom_params == d.atom_params
        assert back.grid == d.grid

    def test_truncation_detected(self, tmp_path):
        d = build_edgelet_dictionary(ImagingGrid(0.5, 0.5, 8, 8), 2, 1, 4)
        path = tmp_path / "dict.bin"
        save_dictionary(path, d)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(FormatError, match="offset"):
            load_dictionary(path)


class TestCheckpoint:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(4)
        stats = SufficientStats(10)
        raw = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        stats.A = raw @ raw.conj().T
        stats.b = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        stats.pulse_count = 7
        stats.data_energy = 12.5
        c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, stats, 0.25, c)
        stats2, lam, c2 = load_checkpoint(path)
        assert lam == 0.25
        assert stats2.pulse_count == 7
        assert stats2.data_energy == 12.5
        assert np.array_equal(stats2.A, stats.A)
        assert np.array_equal(stats2.b, stats.b)
        assert np.array_equal(c2, c)

    def test_truncation_detected(self, tmp_path):
        stats = SufficientStats(4)
        stats.pulse_count = 1
        path = tmp_path / "ckpt.bin"
        save_checkpoint(path, stats, 1.0, np.zeros(4, dtype=complex))
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(FormatError, match="offset"):
            load_checkpoint(path)
