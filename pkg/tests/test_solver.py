import numpy as np
import pytest
from hypothesis import given, strategies as st

from saredge.errors import NumericalError, SarEdgeError
from saredge.forward import NoiseCovariance
from saredge.solver import (
    Coefficients,
    SolverConfig,
    SufficientStats,
    fista_solve,
    gradient,
    kkt_violation,
    lipschitz_constant,
    objective,
    online_step,
    soft_threshold,
    update_stats,
)


def random_pulse(rng, n_r, m, cov_kind="diagonal"):
    G = (rng.standard_normal((n_r, m)) + 1j * rng.standard_normal((n_r, m))) / np.sqrt(2 * n_r)
    d = rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)
    if cov_kind == "diagonal":
        cov = NoiseCovariance.diagonal(rng.uniform(0.5, 2.0, n_r))
    elif cov_kind == "identity":
        cov = NoiseCovariance.scaled_identity(1.0, n_r)
    else:
        a = rng.standard_normal((n_r, n_r)) + 1j * rng.standard_normal((n_r, n_r))
        cov = NoiseCovariance.full(a @ a.conj().T + n_r * np.eye(n_r))
    return G, cov, d


def build_stats(seed, m=24, n_r=16, n_pulses=4, cov_kind="diagonal"):
    rng = np.random.default_rng(seed)
    stats = SufficientStats(m)
    pulses = []
    for _ in range(n_pulses):
        G, cov, d = random_pulse(rng, n_r, m, cov_kind)
        update_stats(stats, G, cov, d)
        pulses.append((G, cov, d))
    return stats, pulses


class TestUpdateStats:
    def test_identity_base_case(self):
        stats = SufficientStats(3)
        G = np.eye(3, dtype=complex)
        d = np.array([1.0, 0.0, 0.0], dtype=complex)
        update_stats(stats, G, NoiseCovariance.scaled_identity(1.0, 3), d)
        assert np.allclose(stats.A, np.eye(3))
        assert np.allclose(stats.b, d)
        assert np.isclose(stats.data_energy, 1.0)
        assert stats.pulse_count == 1

    def test_streaming_equals_batch(self):
        stats, pulses = build_stats(0, n_pulses=2, cov_kind="full")
        batch_a = sum(G.conj().T @ cov.solve(G) for G, cov, _ in pulses)
        batch_b = sum(G.conj().T @ cov.solve(d) for G, cov, d in pulses)
        assert np.linalg.norm(stats.A - batch_a) <= 1e-12 * np.linalg.norm(batch_a)
        assert np.linalg.norm(stats.b - batch_b) <= 1e-12 * np.linalg.norm(batch_b)

    def test_scaled_identity_matches_loop_oracle(self):
        rng = np.random.default_rng(1)
        G = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        d = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        sigma2 = 2.5
        stats = SufficientStats(4)
        update_stats(stats, G, NoiseCovariance.scaled_identity(sigma2, 6), d)
        want = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            for j in range(4):
                want[i, j] = np.sum(np.conj(G[:, i]) * G[:, j]) / sigma2
        assert np.linalg.norm(stats.A - want) <= 1e-12 * np.linalg.norm(want)

    def test_invariants_hold_after_many_updates(self):
        stats, _ = build_stats(2, n_pulses=8, cov_kind="full")
        stats.validate()
        assert stats.data_energy >= 0

    def test_energy_nondecreasing(self):
        rng = np.random.default_rng(3)
        stats = SufficientStats(5)
        prev = 0.0
        for _ in range(6):
            G, cov, d = random_pulse(rng, 8, 5)
            update_stats(stats, G, cov, d)
            assert stats.data_energy >= prev
            prev = stats.data_energy

    def test_shape_errors(self):
        stats = SufficientStats(4)
        with pytest.raises(SarEdgeError):
            update_stats(stats, np.zeros((3, 5), dtype=complex), NoiseCovariance.noiseless(3), np.zeros(3))

    def test_order_permutation_agrees(self):
        _, pulses = build_stats(4, n_pulses=6)
        fwd = SufficientStats(24)
        rev = SufficientStats(24)
        for G, cov, d in pulses:
            update_stats(fwd, G, cov, d)
        for G, cov, d in reversed(pulses):
            update_stats(rev, G, cov, d)
        assert np.linalg.norm(fwd.A - rev.A) <= 1e-10 * np.linalg.norm(fwd.A)
        assert np.linalg.norm(fwd.b - rev.b) <= 1e-10 * np.linalg.norm(fwd.b)


class TestObjective:
    def test_zero_coefficients_give_half_energy(self):
        stats, _ = build_stats(5)
        c = np.zeros(stats.dim, dtype=complex)
        assert np.isclose(objective(stats, c, 1.0), 0.5 * stats.data_energy)

    def test_matches_direct_residual_oracle(self):
        stats, pulses = build_stats(6, n_pulses=1, cov_kind="full")
        G, cov, d = pulses[0]
        rng = np.random.default_rng(7)
        lam = 0.3
        for _ in range(5):
            c = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
            resid = d - G @ c
            direct = 0.5 * float(np.real(np.vdot(resid, cov.solve(resid)))) + lam * float(
                np.sum(np.abs(c))
            )
            assert np.isclose(objective(stats, c, lam), direct, rtol=1e-10)

    def test_quadratic_minimum_at_normal_solution(self):
        stats, _ = build_stats(8, m=12, n_pulses=3)
        c_star = np.linalg.solve(stats.A, stats.b)
        base = objective(stats, c_star, 0.0)
        rng = np.random.default_rng(9)
        for _ in range(10):
            pert = rng.standard_normal(12) + 1j * rng.standard_normal(12)
            assert objective(stats, c_star + 1e-3 * pert, 0.0) > base


class TestGradient:
    def test_zero_coefficients_give_minus_b(self):
        stats, _ = build_stats(10)
        assert np.allclose(gradient(stats, np.zeros(stats.dim, dtype=complex)), -stats.b)

    def test_matches_per_pulse_sum(self):
        stats, pulses = build_stats(11, n_pulses=5, cov_kind="full")
        rng = np.random.default_rng(12)
        c = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
        direct = sum(G.conj().T @ cov.solve(G @ c - d) for G, cov, d in pulses)
        got = gradient(stats, c)
        assert np.linalg.norm(got - direct) <= 1e-12 * np.linalg.norm(direct)

    def test_finite_differences_on_real_stacking(self):
        stats, _ = build_stats(13, m=10)
        rng = np.random.default_rng(14)
        for _ in range(3):
            c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
            g = gradient(stats, c)
            scale = float(np.linalg.norm(c))
            h = 1e-6 * scale

            def smooth(vec):
                return objective(stats, vec, 0.0)

            for j in rng.choice(10, 4, replace=False):
                e = np.zeros(10, dtype=complex)
                e[j] = 1.0
                d_re = (smooth(c + h * e) - smooth(c - h * e)) / (2 * h)
                d_im = (smooth(c + 1j * h * e) - smooth(c - 1j * h * e)) / (2 * h)
                assert abs(d_re - g[j].real) / max(abs(g[j]), 1e-12) < 1e-5
                assert abs(d_im - g[j].imag) / max(abs(g[j]), 1e-12) < 1e-5

    def test_gradient_difference_is_linear(self):
        stats, _ = build_stats(15)
        rng = np.random.default_rng(16)
        c1 = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
        c2 = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
        diff = gradient(stats, c1) - gradient(stats, c2)
        assert np.allclose(diff, stats.A @ (c1 - c2), rtol=1e-12)


class TestLipschitz:
    def test_identity(self):
        stats = SufficientStats(4)
        stats.A = np.eye(4, dtype=complex)
        stats.pulse_count = 1
        assert np.isclose(lipschitz_constant(stats, "spectral"), 1.0)
        assert np.isclose(lipschitz_constant(stats, "power"), 1.01, rtol=1e-5)

    def test_diagonal_spectrum(self):
        stats = SufficientStats(5)
        stats.A = np.diag(np.arange(1.0, 6.0)).astype(complex)
        stats.pulse_count = 1
        assert np.isclose(lipschitz_constant(stats, "spectral"), 5.0)

    def test_power_iteration_within_one_percent(self):
        for seed in range(5):
            stats, _ = build_stats(100 + seed, m=32, n_pulses=6)
            exact = lipschitz_constant(stats, "spectral")
            est = lipschitz_constant(stats, "power")
            assert exact <= est <= 1.02 * exact

    def test_zero_stats_give_zero(self):
        stats = SufficientStats(4)
        assert lipschitz_constant(stats, "spectral") == 0.0
        assert lipschitz_constant(stats, "power") == 0.0

    def test_bound_valid_for_gradient_differences(self):
        stats, _ = build_stats(17)
        rng = np.random.default_rng(18)
        for mode in ("spectral", "power"):
            L = lipschitz_constant(stats, mode)
            for _ in range(25):
                c1 = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
                c2 = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
                lhs = np.linalg.norm(gradient(stats, c1) - gradient(stats, c2))
                assert lhs <= L * np.linalg.norm(c1 - c2) * (1 + 1e-12)


class TestSoftThreshold:
    def test_zero_threshold_is_identity(self):
        v = np.array([1 + 2j, -0.5, 0.0])
        assert np.array_equal(soft_threshold(v, 0.0), v)

    def test_kill_zone(self):
        v = np.array([0.5 + 0.5j, -0.3, 0.9j])
        out = soft_threshold(v, 1.0)
        assert np.all(out == 0.0)

    def test_scalar_shrinkage(self):
        assert soft_threshold(np.array([2.0]), 1.0)[0] == 1.0

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_phase_preserved_modulus_shrunk(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        tau = float(rng.uniform(0, 2))
        out = soft_threshold(v, tau)
        assert np.allclose(np.abs(out), np.maximum(np.abs(v) - tau, 0.0), atol=1e-12)
        survivors = np.abs(v) > tau
        if np.any(survivors):
            ratio = out[survivors] / v[survivors]
            assert np.allclose(ratio.imag, 0.0, atol=1e-12)
            assert np.all(ratio.real > 0)

    def test_negative_threshold_rejected(self):
        with pytest.raises(SarEdgeError):
            soft_threshold(np.ones(2), -0.1)


class TestFista:
    def test_zero_b_fixed_point(self):
        stats = SufficientStats(6)
        stats.A = np.eye(6, dtype=complex)
        stats.pulse_count = 1
        out = fista_solve(stats, SolverConfig(lam=0.5))
        assert np.all(out.c == 0.0)
        assert out.iterations_used <= 1
        assert out.converged

    def test_orthogonal_closed_form(self):
        rng = np.random.default_rng(20)
        stats = SufficientStats(8)
        stats.A = np.eye(8, dtype=complex)
        stats.b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        stats.data_energy = float(np.linalg.norm(stats.b) ** 2)
        stats.pulse_count = 1
        lam = 0.4 * float(np.median(np.abs(stats.b)))
        out = fista_solve(stats, SolverConfig(lam=lam, rel_tol=1e-12))
        assert np.allclose(out.c, soft_threshold(stats.b, lam), atol=1e-9)

    def test_matches_long_run_ista_oracle(self):
        # independent plain proximal gradient on the stacked, whitened system
        m, n_r, n_pulses = 32, 16, 8
        rng = np.random.default_rng(21)
        stats = SufficientStats(m)
        blocks_G, blocks_d = [], []
        for _ in range(n_pulses):
            G, cov, d = random_pulse(rng, n_r, m)
            update_stats(stats, G, cov, d)
            w = 1.0 / np.sqrt(cov.variances)
            blocks_G.append(w[:, None] * G)
            blocks_d.append(w * d)
        lam = 0.05 * float(np.max(np.abs(stats.b)))
        Gs, ds = np.vstack(blocks_G), np.concatenate(blocks_d)
        step = 1.0 / np.linalg.norm(Gs, ord=2) ** 2
        c = np.zeros(m, dtype=complex)
        for _ in range(100_000):
            c = soft_threshold(c - step * (Gs.conj().T @ (Gs @ c - ds)), step * lam)
        obj_ista = 0.5 * np.linalg.norm(ds - Gs @ c) ** 2 + lam * np.sum(np.abs(c))
        out = fista_solve(stats, SolverConfig(lam=lam, max_iters=20000, rel_tol=1e-13))
        assert abs(out.objective_value - obj_ista) / abs(obj_ista) < 1e-8

    def test_best_iterate_never_worse_than_init(self):
        rng = np.random.default_rng(22)
        stats, _ = build_stats(22)
        lam = 0.1 * float(np.max(np.abs(stats.b)))
        for _ in range(5):
            init_c = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
            init = Coefficients(init_c, objective(stats, init_c, lam), 0, False)
            out = fista_solve(stats, SolverConfig(lam=lam, max_iters=3), init=init)
            assert out.objective_value <= init.objective_value + 1e-12

    def test_lambda_extinction_returns_exact_zero(self):
        stats, _ = build_stats(23)
        lam = 1.01 * float(np.max(np.abs(stats.b)))
        rng = np.random.default_rng(24)
        init_c = rng.standard_normal(stats.dim) + 1j * rng.standard_normal(stats.dim)
        init = Coefficients(init_c, objective(stats, init_c, lam), 0, False)
        out = fista_solve(stats, SolverConfig(lam=lam), init=init)
        assert np.all(out.c == 0.0)

    def test_kkt_certificate_at_defaults(self):
        for seed in range(5):
            stats, _ = build_stats(300 + seed, m=48, n_pulses=6)
            lam = 0.05 * float(np.max(np.abs(stats.b)))
            out = fista_solve(stats, SolverConfig(lam=lam))
            assert kkt_violation(stats, out.c, lam) <= 1e-4

    def test_overflowing_statistics_raise(self):
        stats = SufficientStats(3)
        stats.A = np.full((3, 3), 1e308, dtype=complex)
        stats.b = np.full(3, 1e308, dtype=complex)
        stats.pulse_count = 1
        for mode in ("spectral", "power"):
            with pytest.raises(NumericalError):
                fista_solve(stats, SolverConfig(lam=1.0, lipschitz_mode=mode))

    def test_failed_eigensolve_raises_numerical_error(self):
        stats = SufficientStats(3)
        stats.A = np.full((3, 3), np.nan, dtype=complex)
        stats.b = np.ones(3, dtype=complex)
        stats.pulse_count = 1
        with pytest.raises(NumericalError):
            fista_solve(stats, SolverConfig(lam=0.1))


class TestRealRestrictedMode:
    def test_matches_explicit_real_stacking(self):
        # the real-restricted mode must equal LASSO on the stacked system
        # [Re G; Im G] c ~ [Re d; Im d] with block weighting, whose Gram and
        # correlation are exactly Re(A) and Re(b)
        m, n_r, n_pulses = 16, 12, 4
        rng = np.random.default_rng(30)
        stats = SufficientStats(m)
        blocks_G, blocks_d = [], []
        for _ in range(n_pulses):
            G, cov, d = random_pulse(rng, n_r, m)
            update_stats(stats, G, cov, d)
            w = 1.0 / np.sqrt(cov.variances)
            Gw, dw = w[:, None] * G, w * d
            blocks_G.append(np.vstack([Gw.real, Gw.imag]))
            blocks_d.append(np.concatenate([dw.real, dw.imag]))
        Gs, ds = np.vstack(blocks_G), np.concatenate(blocks_d)
        assert np.allclose(Gs.T @ Gs, stats.A.real, atol=1e-10)
        assert np.allclose(Gs.T @ ds, stats.b.real, atol=1e-10)

        lam = 0.05 * float(np.max(np.abs(stats.b.real)))
        step = 1.0 / np.linalg.norm(Gs, ord=2) ** 2
        c = np.zeros(m)
        for _ in range(50_000):
            c = soft_threshold(c - step * (Gs.T @ (Gs @ c - ds)), step * lam)
        out = fista_solve(stats, SolverConfig(lam=lam, rel_tol=1e-13, max_iters=20000, real_coefficients=True))
        assert not np.iscomplexobj(out.c)
        assert np.linalg.norm(out.c - c) <= 1e-6 * np.linalg.norm(c)

    def test_real_gradient_uses_real_projections(self):
        stats, _ = build_stats(31, m=8)
        c = np.random.default_rng(32).standard_normal(8)
        assert np.allclose(gradient(stats, c), stats.A.real @ c - stats.b.real)


class TestOnlineStep:
    def test_first_pulse_equals_cold_solve(self):
        rng = np.random.default_rng(40)
        G, cov, d = random_pulse(rng, 16, 12)
        lam = 0.05
        cfg = SolverConfig(lam=lam)
        stats1 = SufficientStats(12)
        _, out_online = online_step(stats1, G, cov, d, cfg, prev=None)
        stats2 = SufficientStats(12)
        update_stats(stats2, G, cov, d)
        out_cold = fista_solve(stats2, cfg)
        assert np.array_equal(out_online.c, out_cold.c)

    def test_stream_matches_batch_stack_oracle(self):
        m, n_r = 32, 16
        rng = np.random.default_rng(41)
        stats = SufficientStats(m)
        prev = None
        lam = None
        blocks_G, blocks_d = [], []
        for k in range(16):
            G, cov, d = random_pulse(rng, n_r, m)
            if lam is None:
                probe = SufficientStats(m)
                update_stats(probe, G, cov, d)
                lam = 0.05 * float(np.max(np.abs(probe.b)))
            cfg = SolverConfig(lam=lam, rel_tol=1e-12, max_iters=20000)
            _, prev = online_step(stats, G, cov, d, cfg, prev=prev)
            w = 1.0 / np.sqrt(cov.variances)
            blocks_G.append(w[:, None] * G)
            blocks_d.append(w * d)
        Gs, ds = np.vstack(blocks_G), np.concatenate(blocks_d)
        step = 1.0 / np.linalg.norm(Gs, ord=2) ** 2
        c = np.zeros(m, dtype=complex)
        for _ in range(100_000):
            c = soft_threshold(c - step * (Gs.conj().T @ (Gs @ c - ds)), step * lam)
        assert np.linalg.norm(prev.c - c) <= 1e-6 * np.linalg.norm(c)

    def test_state_is_only_stats_and_coefficients(self):
        # two independent streams fed the same pulses produce identical state
        rng = np.random.default_rng(42)
        pulses = [random_pulse(rng, 12, 10) for _ in range(4)]
        cfg = SolverConfig(lam=0.1)
        s1, s2 = SufficientStats(10), SufficientStats(10)
        p1 = p2 = None
        for G, cov, d in pulses:
            _, p1 = online_step(s1, G, cov, d, cfg, prev=p1)
        for G, cov, d in pulses:
            _, p2 = online_step(s2, G, cov, d, cfg, prev=p2)
        assert np.array_equal(p1.c, p2.c)
        assert np.array_equal(s1.A, s2.A)

    def test_warm_and_cold_reach_same_objective(self):
        # paired-run measurement: warm and cold agree on the final objective;
        # warm never costs materially more iterations (the spec's expectation
        # of strict warm wins did not replicate, see the module test notes)
        agree = 0
        for seed in range(6):
            rng = np.random.default_rng(500 + seed)
            pulses = [random_pulse(rng, 16, 24) for _ in range(5)]
            totals = {}
            finals = {}
            for warm in (True, False):
                stats = SufficientStats(24)
                prev = None
                lam = None
                total = 0
                for G, cov, d in pulses:
                    if lam is None:
                        probe = SufficientStats(24)
                        update_stats(probe, G, cov, d)
                        lam = 0.05 * float(np.max(np.abs(probe.b)))
                    cfg = SolverConfig(lam=lam, warm_start=warm)
                    _, prev = online_step(stats, G, cov, d, cfg, prev=prev)
                    total += prev.iterations_used
                totals[warm] = total
                finals[warm] = prev.objective_value
            if abs(finals[True] - finals[False]) <= 1e-8 * abs(finals[False]):
                agree += 1
            assert totals[True] <= 1.1 * totals[False]
        assert agree == 6
