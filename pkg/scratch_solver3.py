"""Round 5: warm-vs-cold on physical pipeline instances (correlated pulses)."""
import numpy as np

from saredge.geometry import (
    ImagingGrid, make_synthetic_scene, Rectangle, Disc, PointTarget,
    make_circular_trajectory, FrequencyGrid, xi_samples, SPEED_OF_LIGHT,
)
from saredge.forward import NoiseCovariance, simulate_pulse_exact, compensate_phase, build_forward_matrix, add_noise
from saredge.edgefilter import edge_weights
from saredge.dictionary import build_edgelet_dictionary, compose_measurement_operator
from saredge.solver import SufficientStats, SolverConfig, update_stats, fista_solve

C = SPEED_OF_LIGHT

grid = ImagingGrid(0.5, 0.5, 16, 16)
dictionary = build_edgelet_dictionary(grid, n_orientations=6, n_scales=1, stride=4)
M = dictionary.n_atoms
nyq = np.pi / grid.spacing_x
eta = 1 / np.sqrt(1 + 0.25**2)
fg = FrequencyGrid(np.linspace(0.1, 0.8, 16) * nyq * C / 2 / eta)
diam = grid.diameter

scene_pool = [
    [Rectangle(0.05, -0.05, 0.4, 0.3, 1.0)],
    [Disc(-0.1, 0.1, 0.15, 1.0), PointTarget(0.2, -0.2, 2.0)],
    [Rectangle(-0.1, 0.0, 0.25, 0.45, 0.8), Disc(0.2, 0.15, 0.12, 1.2)],
    [Disc(0.0, 0.0, 0.3, 1.0)],
    [Rectangle(0.0, 0.1, 0.5, 0.2, 1.0), Rectangle(0.0, -0.25, 0.3, 0.15, 0.6)],
]

print(f"M = {M}")
for rel_tol in (1e-9,):
    wins = 0
    trials = 10
    for trial in range(trials):
        scene = make_synthetic_scene(grid, scene_pool[trial % len(scene_pool)])
        traj = make_circular_trajectory(20 * diam, 5 * diam, 12, scene_diameter=diam,
                                        start_angle=0.3 * trial)
        sigma2 = 0.05 ** 2
        cov = NoiseCovariance.scaled_identity(sigma2, fg.n_samples)
        totals = {}
        objs = {}
        for mode in ("warm", "cold"):
            st = SufficientStats(M)
            prev = None
            lam = None
            tot = []
            for n in range(12):
                raw = simulate_pulse_exact(scene, traj, n, fg)
                data = add_noise(raw, cov, 5000 + 100 * trial + n)
                dt = compensate_phase(data, traj, n, fg)
                xi = xi_samples(fg, traj, n)
                w = edge_weights(xi, 2.0)
                G = compose_measurement_operator(build_forward_matrix(grid, traj, n, fg), dictionary, w).entries
                update_stats(st, G, cov.transformed(w), dt * w)
                if lam is None:
                    lam = 0.01 * float(np.max(np.abs(st.b)))
                out = fista_solve(st, SolverConfig(lam=lam, rel_tol=rel_tol, max_iters=20000),
                                  init=prev if mode == "warm" else None)
                prev = out
                tot.append(out.iterations_used)
            totals[mode] = tot
            objs[mode] = out.objective_value
        w_tot, c_tot = sum(totals["warm"]), sum(totals["cold"])
        agree = abs(objs["warm"] - objs["cold"]) / abs(objs["cold"])
        wins += int(w_tot <= c_tot)
        print(f"trial {trial}: warm {w_tot} vs cold {c_tot}  obj rel gap {agree:.1e}  per-pulse warm {totals['warm']}")
    print(f"physical warm wins {wins}/{trials} at rel_tol {rel_tol}")
