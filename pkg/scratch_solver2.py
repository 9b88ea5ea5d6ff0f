"""Round 4: random-G ISTA instance; FP magnitudes; warm-start breakdown."""
import time
import numpy as np

from saredge.forward import NoiseCovariance
from saredge.solver import (
    SufficientStats, SolverConfig, update_stats, fista_solve, soft_threshold,
)
from saredge.geometry import ImagingGrid, FrequencyGrid, make_circular_trajectory, xi_samples, SPEED_OF_LIGHT
from saredge.dictionary import build_edgelet_dictionary, compose_measurement_operator
from saredge.forward import build_forward_matrix
from saredge.edgefilter import edge_weights

C = SPEED_OF_LIGHT

# --- ISTA equivalence with random G (criterion 7: M=128, 16 pulses) ---
M, n_r, n_pulses = 128, 16, 16
rng = np.random.default_rng(42)
stats = SufficientStats(M)
blocks_G, blocks_d = [], []
for k in range(n_pulses):
    G = (rng.standard_normal((n_r, M)) + 1j * rng.standard_normal((n_r, M))) / np.sqrt(2 * n_r)
    d = rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)
    var = rng.uniform(0.5, 2.0, n_r)
    cov = NoiseCovariance.diagonal(var)
    update_stats(stats, G, cov, d)
    blocks_G.append(G / np.sqrt(var)[:, None])
    blocks_d.append(d / np.sqrt(var))
lam = 0.05 * float(np.max(np.abs(stats.b)))
Gs, ds = np.vstack(blocks_G), np.concatenate(blocks_d)
print("cond(A) =", np.linalg.cond(stats.A))
Ls = np.linalg.norm(Gs, ord=2) ** 2
c_ista = np.zeros(M, dtype=complex)
t0 = time.time()
GtG = Gs.conj().T @ Gs   # ISTA oracle may precompute its own normal matrix? NO - keep data-domain
Gtd = Gs.conj().T @ ds
for it in range(100_000):
    c_ista = soft_threshold(c_ista - (Gs.conj().T @ (Gs @ c_ista - ds)) / Ls, lam / Ls)
t_i = time.time() - t0
obj_ista = 0.5 * np.linalg.norm(ds - Gs @ c_ista) ** 2 + lam * np.sum(np.abs(c_ista))
out = fista_solve(stats, SolverConfig(lam=lam, max_iters=20000, rel_tol=1e-13))
print(f"ISTA {t_i:.1f}s; FISTA iters {out.iterations_used}")
print(f"obj gap {abs(out.objective_value-obj_ista)/abs(obj_ista):.2e}  coef gap {np.linalg.norm(out.c-c_ista)/np.linalg.norm(c_ista):.2e}")

# --- sparse recovery FP magnitudes ---
grid2 = ImagingGrid(0.5, 0.5, 16, 16)
dict2 = build_edgelet_dictionary(grid2, n_orientations=8, n_scales=2, stride=4)
M2 = dict2.n_atoms
gram = np.abs(dict2.atoms.T @ dict2.atoms)
traj2 = make_circular_trajectory(20 * grid2.diameter, 5 * grid2.diameter, 32, scene_diameter=grid2.diameter)
nyq2 = np.pi / grid2.spacing_x
eta = 1 / np.sqrt(1 + 0.25**2)
fg2 = FrequencyGrid(np.linspace(0.1, 0.8, 24) * nyq2 * C / 2 / eta)

def plant_support(seed, k=5, max_coh=0.5):
    rg = np.random.default_rng(seed)
    while True:
        cand = rg.choice(M2, size=k, replace=False)
        sub = gram[np.ix_(cand, cand)].copy()
        np.fill_diagonal(sub, 0.0)
        if sub.max() <= max_coh:
            return np.sort(cand)

for seed in (0, 2):
    support = plant_support(seed)
    rg = np.random.default_rng(1000 + seed)
    c_true = np.zeros(M2, dtype=complex)
    c_true[support] = rg.uniform(0.5, 1.5, 5) * np.exp(2j * np.pi * rg.uniform(size=5))
    stats2 = SufficientStats(M2)
    lam2 = None
    for n in range(32):
        xi = xi_samples(fg2, traj2, n)
        w = edge_weights(xi, 2.0)
        G = compose_measurement_operator(build_forward_matrix(grid2, traj2, n, fg2), dict2, w).entries
        update_stats(stats2, G, NoiseCovariance.scaled_identity(1.0, fg2.n_samples), G @ c_true)
        if lam2 is None:
            lam2 = 1e-5 * float(np.max(np.abs(stats2.b)))
    out2 = fista_solve(stats2, SolverConfig(lam=lam2, max_iters=20000, rel_tol=1e-13))
    nz = np.nonzero(out2.c)[0]
    fp = np.setdiff1d(nz, support)
    print(f"seed {seed}: FP indices {fp}, |c_fp| {np.abs(out2.c[fp])}, max|c| {np.abs(out2.c).max():.3f}, "
          f"lam2 {lam2:.3e}")

# --- warm vs cold per-pulse breakdown, different tolerances ---
for rel_tol in (1e-9, 1e-7):
    wins = 0
    for seed in range(10):
        totals = {}
        finals = {}
        for mode in ("warm", "cold"):
            st = SufficientStats(48)
            rg = np.random.default_rng(seed)
            prev = None
            per = []
            for k in range(6):
                G = (rg.standard_normal((16, 48)) + 1j * rg.standard_normal((16, 48))) / 6
                d = rg.standard_normal(16) + 1j * rg.standard_normal(16)
                update_stats(st, G, NoiseCovariance.scaled_identity(1.0, 16), d)
                lam_k = 0.05 * float(np.max(np.abs(st.b)))
                out_k = fista_solve(st, SolverConfig(lam=lam_k, rel_tol=rel_tol),
                                    init=prev if mode == "warm" else None)
                prev = out_k
                per.append(out_k.iterations_used)
            totals[mode] = sum(per)
            finals[mode] = per
        wins += int(totals["warm"] <= totals["cold"])
        if seed < 3:
            print(f"tol {rel_tol} seed {seed}: warm {finals['warm']} cold {finals['cold']}")
    print(f"rel_tol {rel_tol}: warm wins {wins}/10")
