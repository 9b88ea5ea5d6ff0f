"""Scratch exploration for pinning test scenarios (not part of the package)."""
import numpy as np

from saredge.geometry import (
    ImagingGrid, make_synthetic_scene, Disc, Rectangle, make_circular_trajectory,
    FrequencyGrid, SPEED_OF_LIGHT, xi_samples,
)
from saredge.forward import (
    simulate_pulse_exact, compensate_phase, simulate_pulse_farfield, build_forward_matrix,
)
from saredge.edgefilter import reference_edge_map, apply_edge_filter, edge_weights

C = SPEED_OF_LIGHT

# --- 1. Laplacian stencil oracle (criterion 5) ---
grid = ImagingGrid(0.5, 0.5, 64, 64)
for radius_frac in (0.2, 0.25, 0.3):
    scene = make_synthetic_scene(grid, [Disc(0.0, 0.0, radius_frac, 1.0)])
    em = reference_edge_map(scene, 2.0)
    rho = scene.reflectivity
    dx2 = grid.spacing_x ** 2
    dy2 = grid.spacing_y ** 2
    lap = (
        (np.roll(rho, 1, axis=1) + np.roll(rho, -1, axis=1) - 2 * rho) / dx2
        + (np.roll(rho, 1, axis=0) + np.roll(rho, -1, axis=0) - 2 * rho) / dy2
    )
    stencil = -lap
    stencil = stencil - stencil.mean()  # spectral map is DC-free
    rel = np.linalg.norm(em.values - stencil) / np.linalg.norm(stencil)
    print(f"stencil radius={radius_frac}: rel L2 diff = {rel:.4f}")

# --- 2. far-field consistency (criterion 2): pick frequency band ---
grid2 = ImagingGrid(0.5, 0.5, 32, 32)
scene2 = make_synthetic_scene(grid2, [Rectangle(0.05, -0.08, 0.4, 0.3, 1.0)])
diam = grid2.diameter
print("diameter", diam)
for f_hz in (2e7, 5e7, 1e8):
    fg = FrequencyGrid.from_band(f_hz, f_hz, 16)  # band [f/2, 3f/2]
    errs = []
    for ratio in (10, 30, 100):
        R = ratio * diam
        traj = make_circular_trajectory(R, 0.3 * R, 4, scene_diameter=diam)
        ff = simulate_pulse_farfield(scene2, traj, 1, fg)
        ex = compensate_phase(simulate_pulse_exact(scene2, traj, 1, fg), traj, 1, fg)
        errs.append(np.linalg.norm(ff - ex) / np.linalg.norm(ff))
    ximax = 2 * 2 * np.pi * 1.5 * f_hz / C
    print(f"f={f_hz:.1e} ximax={ximax:.2f} nyq={np.pi/grid2.spacing_x:.2f} errs {[f'{e:.2e}' for e in errs]}")

# --- 3. edge-filter commutation (criterion 4): 64x64 disc, p=2, ratio 100 ---
grid3 = ImagingGrid(0.5, 0.5, 64, 64)
scene3 = make_synthetic_scene(grid3, [Disc(0.0, 0.0, 0.25, 1.0)])
oracle3 = reference_edge_map(scene3, 2.0)
diam3 = grid3.diameter
R3 = 100 * diam3
nyq = np.pi / grid3.spacing_x
for (flo_frac, fhi_frac, nr) in [(0.05, 0.45, 32), (0.02, 0.3, 32), (0.1, 0.6, 48)]:
    # choose omega so that |xi| spans [flo_frac, fhi_frac] * nyquist for a ZERO-altitude platform,
    # then use a platform WITH altitude (look-direction shortening) to stay generic
    alt_frac = 0.3
    eta = 1.0 / np.sqrt(1 + alt_frac**2)  # horizontal shortening factor
    omega_lo = flo_frac * nyq * C / 2 / eta
    omega_hi = fhi_frac * nyq * C / 2 / eta
    fg3 = FrequencyGrid(np.linspace(omega_lo, omega_hi, nr))
    traj3 = make_circular_trajectory(R3, alt_frac * R3, 8, scene_diameter=diam3)
    worst = 0.0
    for n in range(8):
        xi = xi_samples(fg3, traj3, n)
        w = edge_weights(xi, 2.0)
        fwd = build_forward_matrix(grid3, traj3, n, fg3)
        lhs = w * (fwd.entries @ scene3.reflectivity_vector)       # W F rho (pure far-field matrix path)
        rhs = fwd.entries @ oracle3.vector                          # F rho_E
        # also the exact-simulation path
        ex = apply_edge_filter(
            compensate_phase(simulate_pulse_exact(scene3, traj3, n, fg3), traj3, n, fg3), xi, 2.0)
        err_mat = np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs)
        err_exact = np.linalg.norm(ex - rhs) / np.linalg.norm(ex)
        worst = max(worst, err_mat, err_exact)
    print(f"commutation band [{flo_frac},{fhi_frac}]xNyq nr={nr}: worst rel err {worst:.3e}")
