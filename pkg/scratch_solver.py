"""Solver-side scenario tuning: KKT, ISTA-equivalence, sparse recovery, warm starts."""
import time
import numpy as np

from saredge.geometry import (
    ImagingGrid, make_synthetic_scene, Rectangle, Disc, make_circular_trajectory,
    FrequencyGrid, SPEED_OF_LIGHT, xi_samples,
)
from saredge.forward import (
    NoiseCovariance, simulate_pulse_exact, compensate_phase, build_forward_matrix, add_noise,
)
from saredge.edgefilter import edge_weights, apply_edge_filter
from saredge.dictionary import build_edgelet_dictionary, compose_measurement_operator
from saredge.solver import (
    SufficientStats, SolverConfig, update_stats, fista_solve, objective, gradient,
    kkt_violation, soft_threshold, lipschitz_constant,
)

C = SPEED_OF_LIGHT


def random_instance(seed, M=64, n_pulses=4, n_r=24, lam_frac=0.05):
    rng = np.random.default_rng(seed)
    stats = SufficientStats(M)
    pulses = []
    for _ in range(n_pulses):
        G = (rng.standard_normal((n_r, M)) + 1j * rng.standard_normal((n_r, M))) / np.sqrt(2 * n_r)
        d = rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)
        cov = NoiseCovariance.diagonal(rng.uniform(0.5, 2.0, n_r))
        update_stats(stats, G, cov, d)
        pulses.append((G, cov, d))
    lam = lam_frac * float(np.max(np.abs(stats.b)))
    return stats, lam, pulses


# --- KKT at default tolerances ---
t0 = time.time()
worst_kkt = 0.0
for seed in range(20):
    stats, lam, _ = random_instance(seed)
    cfg = SolverConfig(lam=lam)
    out = fista_solve(stats, cfg)
    v = kkt_violation(stats, out.c, lam)
    worst_kkt = max(worst_kkt, v)
print(f"KKT worst over 20 instances: {worst_kkt:.2e}  ({time.time()-t0:.1f}s)")

# --- ISTA equivalence on a physical instance (criterion 7 scale) ---
grid = ImagingGrid(0.5, 0.5, 16, 16)
scene = make_synthetic_scene(grid, [Rectangle(0.05, -0.05, 0.4, 0.3, 1.0), Disc(-0.15, 0.2, 0.1, 0.7)])
diam = grid.diameter
nyq = np.pi / grid.spacing_x
eta = 1 / np.sqrt(1 + 0.25**2)
fg = FrequencyGrid(np.linspace(0.1, 0.8, 16) * nyq * C / 2 / eta)
traj = make_circular_trajectory(20 * diam, 0.25 * 20 * diam, 16, scene_diameter=diam)
dictionary = build_edgelet_dictionary(grid, n_orientations=8, n_scales=1, stride=4)
M = dictionary.n_atoms
print("dictionary M =", M)

p = 2.0
rng = np.random.default_rng(7)
stats = SufficientStats(M)
blocks_G, blocks_d = [], []
lam = None
for n in range(16):
    raw = simulate_pulse_exact(scene, traj, n, fg)
    base_cov = NoiseCovariance.scaled_identity(0.05**2 * float(np.mean(np.abs(raw))**2), fg.n_samples)
    data = add_noise(raw, base_cov, 100 + n)
    dt = compensate_phase(data, traj, n, fg)
    xi = xi_samples(fg, traj, n)
    w = edge_weights(xi, p)
    dbar = dt * w
    cov = base_cov.transformed(w)
    fwd = build_forward_matrix(grid, traj, n, fg)
    G = compose_measurement_operator(fwd, dictionary, w).entries
    update_stats(stats, G, cov, dbar)
    if lam is None:
        lam = 0.02 * float(np.max(np.abs(stats.b)))
    # whitened stacked blocks for ISTA oracle
    whiten = 1.0 / np.sqrt(cov.variances)
    blocks_G.append(whiten[:, None] * G)
    blocks_d.append(whiten * dbar)

Gs = np.vstack(blocks_G)
ds = np.concatenate(blocks_d)
Ls = np.linalg.norm(Gs, ord=2) ** 2
c_ista = np.zeros(M, dtype=complex)
t0 = time.time()
for it in range(100_000):
    grad = Gs.conj().T @ (Gs @ c_ista - ds)
    c_ista = soft_threshold(c_ista - grad / Ls, lam / Ls)
t_ista = time.time() - t0
obj_ista = 0.5 * np.linalg.norm(ds - Gs @ c_ista) ** 2 + lam * np.sum(np.abs(c_ista))

t0 = time.time()
cfg = SolverConfig(lam=lam, max_iters=30000, rel_tol=1e-12)
out = fista_solve(stats, cfg)
t_f = time.time() - t0
obj_gap = abs(out.objective_value - obj_ista) / abs(obj_ista)
coef_gap = np.linalg.norm(out.c - c_ista) / np.linalg.norm(c_ista)
print(f"ISTA {t_ista:.1f}s obj {obj_ista:.8g}; FISTA {t_f:.1f}s iters {out.iterations_used} obj {out.objective_value:.8g}")
print(f"obj gap {obj_gap:.2e} (need <=1e-8), coef gap {coef_gap:.2e} (need <=1e-6)")

# --- sparse recovery (criterion 11 scale: M=256, 32 pulses, noiseless) ---
grid2 = ImagingGrid(0.5, 0.5, 16, 16)
dict2 = build_edgelet_dictionary(grid2, n_orientations=8, n_scales=2, stride=4)
M2 = dict2.n_atoms
print("recovery dictionary M =", M2)
gram = np.abs(dict2.atoms.T @ dict2.atoms)
traj2 = make_circular_trajectory(20 * grid2.diameter, 5 * grid2.diameter, 32, scene_diameter=grid2.diameter)
nyq2 = np.pi / grid2.spacing_x
fg2 = FrequencyGrid(np.linspace(0.1, 0.8, 24) * nyq2 * C / 2 / eta)

def plant_support(seed, k=5, max_coh=0.5):
    rng = np.random.default_rng(seed)
    while True:
        cand = rng.choice(M2, size=k, replace=False)
        sub = gram[np.ix_(cand, cand)].copy()
        np.fill_diagonal(sub, 0.0)
        if sub.max() <= max_coh:
            return np.sort(cand)

for seed in (0, 1, 2):
    support = plant_support(seed)
    rng = np.random.default_rng(1000 + seed)
    c_true = np.zeros(M2, dtype=complex)
    c_true[support] = rng.uniform(0.5, 1.5, 5) * np.exp(2j * np.pi * rng.uniform(size=5))
    stats2 = SufficientStats(M2)
    lam2 = None
    for n in range(32):
        xi = xi_samples(fg2, traj2, n)
        w = edge_weights(xi, 2.0)
        fwd = build_forward_matrix(grid2, traj2, n, fg2)
        G = compose_measurement_operator(fwd, dict2, w).entries
        dbar = G @ c_true
        cov = NoiseCovariance.scaled_identity(1.0, fg2.n_samples)
        update_stats(stats2, G, cov, dbar)
        if lam2 is None:
            lam2 = 1e-5 * float(np.max(np.abs(stats2.b)))
    out2 = fista_solve(stats2, SolverConfig(lam=lam2, max_iters=20000, rel_tol=1e-13))
    rec_support = np.nonzero(out2.c)[0]
    rel = np.linalg.norm(out2.c - c_true) / np.linalg.norm(c_true)
    print(f"seed {seed}: support {support} -> recovered {rec_support.size} nz, "
          f"exact={np.array_equal(np.sort(rec_support), support)}, rel err {rel:.2e}, iters {out2.iterations_used}")

# --- warm vs cold ---
wins = 0
for seed in range(10):
    stats_w = None
    total_w = total_c = 0
    obj_w = obj_c = None
    for mode in ("warm", "cold"):
        st = SufficientStats(48)
        rng = np.random.default_rng(seed)
        prev = None
        total = 0
        for k in range(6):
            G = (rng.standard_normal((16, 48)) + 1j * rng.standard_normal((16, 48))) / 6
            d = rng.standard_normal(16) + 1j * rng.standard_normal(16)
            cov = NoiseCovariance.scaled_identity(1.0, 16)
            update_stats(st, G, cov, d)
            lam_k = 0.05 * float(np.max(np.abs(st.b)))
            cfg_k = SolverConfig(lam=lam_k, warm_start=(mode == "warm"))
            out_k = fista_solve(st, cfg_k, init=prev if mode == "warm" else None)
            prev = out_k
            total += out_k.iterations_used
        if mode == "warm":
            total_w, obj_w = total, out_k.objective_value
        else:
            total_c, obj_c = total, out_k.objective_value
    same = abs(obj_w - obj_c) / abs(obj_c) < 1e-8
    wins += int(total_w <= total_c)
    print(f"seed {seed}: warm {total_w} vs cold {total_c} iters, obj agree={same}")
print(f"warm wins {wins}/10")
