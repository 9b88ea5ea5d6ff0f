import numpy as np
import pytest

from saredge.errors import GeometryError, NumericalError
from saredge.forward import (
    NoiseCovariance,
    PulseRecord,
    add_noise,
    build_forward_matrix,
    compensate_phase,
    simulate_pulse_exact,
    simulate_pulse_farfield,
)
from saredge.geometry import (
    Disc,
    FrequencyGrid,
    GroundScene,
    ImagingGrid,
    PlatformTrajectory,
    PointTarget,
    Rectangle,
    SPEED_OF_LIGHT,
    make_circular_trajectory,
    make_synthetic_scene,
    xi_samples,
)

C = SPEED_OF_LIGHT


@pytest.fixture
def freq_grid():
    return FrequencyGrid.from_band(2e7, 2e7, 16)


@pytest.fixture
def far_traj():
    return make_circular_trajectory(60.0, 20.0, 4)


def odd_grid_scene_with_origin_target():
    # odd pixel count puts a pixel center exactly at the origin
    grid = ImagingGrid(0.5, 0.5, 31, 31)
    return make_synthetic_scene(grid, [PointTarget(0.0, 0.0, 1.0)])


class TestSimulateExact:
    def test_zero_scene_gives_zero(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.5, 16, 16)
        scene = make_synthetic_scene(grid, [])
        assert np.all(simulate_pulse_exact(scene, far_traj, 0, freq_grid) == 0.0)

    def test_single_scatterer_is_pure_range_phase(self, freq_grid, far_traj):
        scene = odd_grid_scene_with_origin_target()
        data = simulate_pulse_exact(scene, far_traj, 1, freq_grid)
        rng = np.linalg.norm(far_traj.position(1))
        expected = scene.grid.pixel_area * np.exp(1j * 2 * freq_grid.omega / C * rng)
        assert np.allclose(data, expected, rtol=1e-12)

    def test_superposition(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.5, 16, 16)
        one = make_synthetic_scene(grid, [PointTarget(0.2, 0.1, 1.0)])
        two = make_synthetic_scene(grid, [PointTarget(-0.15, -0.2, 1.0)])
        both_raster = one.reflectivity + two.reflectivity
        both = GroundScene(grid, both_raster)
        d = simulate_pulse_exact(both, far_traj, 0, freq_grid)
        d1 = simulate_pulse_exact(one, far_traj, 0, freq_grid)
        d2 = simulate_pulse_exact(two, far_traj, 0, freq_grid)
        assert np.allclose(d, d1 + d2, rtol=1e-12)

    def test_linearity(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.5, 12, 12)
        rng = np.random.default_rng(3)
        r1 = GroundScene(grid, rng.standard_normal(grid.pixel_centers.shape[0]).reshape(12, 12))
        r2 = GroundScene(grid, rng.standard_normal(144).reshape(12, 12))
        combo = GroundScene(grid, 2.5 * r1.reflectivity - 1.25 * r2.reflectivity)
        lhs = simulate_pulse_exact(combo, far_traj, 2, freq_grid)
        rhs = 2.5 * simulate_pulse_exact(r1, far_traj, 2, freq_grid) - 1.25 * simulate_pulse_exact(
            r2, far_traj, 2, freq_grid
        )
        assert np.allclose(lhs, rhs, rtol=1e-12)


class TestCompensatePhase:
    def test_origin_target_becomes_constant(self, freq_grid, far_traj):
        scene = odd_grid_scene_with_origin_target()
        raw = simulate_pulse_exact(scene, far_traj, 0, freq_grid)
        comp = compensate_phase(raw, far_traj, 0, freq_grid)
        assert np.allclose(comp, scene.grid.pixel_area * (1.0 + 0.0j), rtol=1e-12)

    def test_round_trip_identity(self, freq_grid, far_traj):
        rng = np.random.default_rng(5)
        data = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        comp = compensate_phase(data, far_traj, 0, freq_grid)
        # re-apply the opposite phase by hand
        back = comp * np.exp(1j * 2 * freq_grid.omega / C * np.linalg.norm(far_traj.position(0)))
        assert np.allclose(back, data, rtol=1e-12)

    def test_offcenter_target_matches_transform_sample(self):
        # far-field limit: compensated data approaches exp(-1j x0 . xi) * pixel_area
        grid = ImagingGrid(0.5, 0.5, 32, 32)
        target = (grid.x_coords[20], grid.y_coords[9])
        scene = make_synthetic_scene(grid, [PointTarget(*target, 1.0)])
        fg = FrequencyGrid.from_band(1e7, 1e7, 8)
        traj = make_circular_trajectory(2000.0, 500.0, 3, scene_diameter=grid.diameter)
        comp = compensate_phase(simulate_pulse_exact(scene, traj, 1, fg), traj, 1, fg)
        xi = xi_samples(fg, traj, 1)
        expected = grid.pixel_area * np.exp(-1j * (xi @ np.asarray(target)))
        assert np.linalg.norm(comp - expected) / np.linalg.norm(expected) < 1e-4

    def test_length_mismatch_rejected(self, freq_grid, far_traj):
        with pytest.raises(GeometryError):
            compensate_phase(np.zeros(7, dtype=complex), far_traj, 0, freq_grid)


class TestFarFieldSimulator:
    def test_zero_scene(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.5, 16, 16)
        scene = make_synthetic_scene(grid, [])
        assert np.all(simulate_pulse_farfield(scene, far_traj, 0, freq_grid) == 0.0)

    def test_origin_point_constant(self, freq_grid, far_traj):
        scene = odd_grid_scene_with_origin_target()
        d = simulate_pulse_farfield(scene, far_traj, 0, freq_grid)
        assert np.allclose(d, scene.grid.pixel_area, rtol=1e-12)

    def test_error_decreases_with_range(self, freq_grid):
        grid = ImagingGrid(0.5, 0.5, 32, 32)
        scene = make_synthetic_scene(grid, [Rectangle(0.05, -0.08, 0.4, 0.3, 1.0)])
        errs = []
        for rng_m in (20.0, 200.0):
            traj = make_circular_trajectory(rng_m, 0.3 * rng_m, 2)
            ff = simulate_pulse_farfield(scene, traj, 1, freq_grid)
            ex = compensate_phase(simulate_pulse_exact(scene, traj, 1, freq_grid), traj, 1, freq_grid)
            errs.append(np.linalg.norm(ff - ex) / np.linalg.norm(ff))
        assert errs[1] < errs[0]


class TestForwardMatrix:
    def test_nadir_entries_equal_pixel_area(self, freq_grid):
        grid = ImagingGrid(0.5, 0.5, 8, 8)
        traj = PlatformTrajectory(np.array([[0.0, 0.0, 100.0]]))
        fwd = build_forward_matrix(grid, traj, 0, freq_grid)
        assert np.allclose(fwd.entries, grid.pixel_area)

    def test_unit_modulus_times_pixel_area(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.4, 8, 10)
        fwd = build_forward_matrix(grid, far_traj, 2, freq_grid)
        assert np.max(np.abs(np.abs(fwd.entries) - grid.pixel_area)) < 1e-12 * grid.pixel_area

    def test_matvec_matches_double_loop_oracle(self):
        grid = ImagingGrid(0.5, 0.5, 8, 8)
        fg = FrequencyGrid.from_band(3e7, 2e7, 4)
        traj = make_circular_trajectory(80.0, 25.0, 4)
        rng = np.random.default_rng(11)
        rho = rng.standard_normal(grid.n_pixels)
        for n in range(4):
            fwd = build_forward_matrix(grid, traj, n, fg)
            got = fwd.entries @ rho
            xi = xi_samples(fg, traj, n)
            want = np.zeros(4, dtype=complex)
            for m in range(4):
                acc = 0.0 + 0.0j
                for i in range(grid.n_pixels):
                    acc += rho[i] * np.exp(-1j * float(grid.pixel_centers[i] @ xi[m]))
                want[m] = acc * grid.pixel_area
            assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-12

    def test_matches_farfield_simulator(self, freq_grid, far_traj):
        grid = ImagingGrid(0.5, 0.5, 16, 16)
        scene = make_synthetic_scene(grid, [Disc(0.1, -0.1, 0.2, 1.0)])
        fwd = build_forward_matrix(grid, far_traj, 3, freq_grid)
        assert np.allclose(
            fwd.entries @ scene.reflectivity_vector,
            simulate_pulse_farfield(scene, far_traj, 3, freq_grid),
            rtol=1e-13,
        )


class TestNoiseCovariance:
    def test_constructors_validate(self):
        with pytest.raises(NumericalError):
            NoiseCovariance.scaled_identity(0.0, 4)
        with pytest.raises(NumericalError):
            NoiseCovariance.diagonal([1.0, -2.0])
        with pytest.raises(NumericalError):
            NoiseCovariance.full(np.array([[1.0, 2.0], [0.5, 1.0]]))  # not Hermitian
        with pytest.raises(NumericalError):
            NoiseCovariance.full(-np.eye(3))  # not positive definite

    def test_solve_matches_dense_inverse(self):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        cov_mat = m @ m.conj().T + 5 * np.eye(5)
        cov = NoiseCovariance.full(cov_mat)
        rhs = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        assert np.allclose(cov.solve(rhs), np.linalg.solve(cov_mat, rhs), rtol=1e-10)

    def test_transformed_scales_variances(self):
        cov = NoiseCovariance.scaled_identity(2.0, 3)
        w = np.array([1.0, 2.0, 3.0])
        t = cov.transformed(w)
        assert t.kind == "diagonal"
        assert np.allclose(t.variances, 2.0 * w**2)
        with pytest.raises(NumericalError):
            cov.transformed(np.array([1.0, 0.0, 1.0]))

    def test_noiseless_tag_passes_through(self):
        cov = NoiseCovariance.noiseless(4)
        assert cov.transformed(np.ones(4)).kind == "noiseless"
        rhs = np.arange(4, dtype=complex)
        assert np.array_equal(cov.solve(rhs), rhs)


class TestAddNoise:
    def test_noiseless_is_identity(self):
        data = np.arange(6, dtype=complex)
        assert np.array_equal(add_noise(data, NoiseCovariance.noiseless(6), 1), data)

    def test_deterministic_given_seed(self):
        cov = NoiseCovariance.scaled_identity(0.5, 8)
        data = np.ones(8, dtype=complex)
        assert np.array_equal(add_noise(data, cov, 42), add_noise(data, cov, 42))
        assert not np.array_equal(add_noise(data, cov, 42), add_noise(data, cov, 43))

    def test_sample_covariance_close_to_identity(self):
        # 1e5 draws of unit-variance noise: sample covariance within 5%
        n = 4
        cov = NoiseCovariance.scaled_identity(1.0, n)
        rng = np.random.default_rng(0)
        draws = np.array([cov.sample(rng) for _ in range(100_000)])
        sample_cov = draws.conj().T @ draws / draws.shape[0]
        assert np.linalg.norm(sample_cov - np.eye(n), ord=2) < 0.05

    def test_full_covariance_statistics(self):
        rng_mat = np.random.default_rng(9)
        m = rng_mat.standard_normal((3, 3)) + 1j * rng_mat.standard_normal((3, 3))
        target = m @ m.conj().T + 3 * np.eye(3)
        cov = NoiseCovariance.full(target)
        rng = np.random.default_rng(1)
        draws = np.array([cov.sample(rng) for _ in range(60_000)])
        sample_cov = draws.T @ draws.conj() / draws.shape[0]  # E[eps eps^H]
        assert np.linalg.norm(sample_cov - target, ord=2) / np.linalg.norm(target, ord=2) < 0.05


class TestPulseRecord:
    def test_shape_validation(self, freq_grid):
        with pytest.raises(GeometryError):
            PulseRecord(0, np.zeros(3), freq_grid, np.zeros(5, dtype=complex), NoiseCovariance.noiseless(5))
        rec = PulseRecord(
            0,
            np.array([10.0, 0.0, 5.0]),
            freq_grid,
            np.zeros(16, dtype=complex),
            NoiseCovariance.noiseless(16),
        )
        assert rec.data.size == freq_grid.n_samples
