"""Round 3: smooth-disc stencil; commutation re-check; adjoint margin."""
import numpy as np
from scipy.special import erf

from saredge.geometry import (
    ImagingGrid, make_synthetic_scene, Disc, Rectangle, make_circular_trajectory,
    FrequencyGrid, SPEED_OF_LIGHT, xi_samples,
)
from saredge.forward import simulate_pulse_exact, compensate_phase, build_forward_matrix
from saredge.edgefilter import reference_edge_map, apply_edge_filter
from saredge.geometry import GroundScene

C = SPEED_OF_LIGHT

grid = ImagingGrid(0.5, 0.5, 64, 64)
xg, yg = np.meshgrid(grid.x_coords, grid.y_coords)
r = np.hypot(xg, yg)
dx2, dy2 = grid.spacing_x**2, grid.spacing_y**2

def stencil_rel(rho):
    em = reference_edge_map(GroundScene(grid, rho), 2.0).values
    st = -((np.roll(rho, 1, 1) + np.roll(rho, -1, 1) - 2 * rho) / dx2
           + (np.roll(rho, 1, 0) + np.roll(rho, -1, 0) - 2 * rho) / dy2)
    return np.linalg.norm(em - st) / np.linalg.norm(st)

a = 0.25
for sig_px in (0.75, 1.0, 1.25, 1.5, 2.0):
    sig = sig_px * grid.spacing_x
    rho = 0.5 * (1.0 + erf((a - r) / (np.sqrt(2) * sig)))
    print(f"erf-disc sigma={sig_px}px: rel {stencil_rel(rho):.4f}")

# linear-ramp boundary
for w_px in (1.0, 2.0, 3.0):
    w = w_px * grid.spacing_x
    rho = np.clip((a - r) / w + 0.5, 0.0, 1.0)
    print(f"ramp-disc width={w_px}px: rel {stencil_rel(rho):.4f}")

# --- commutation after sign fix, off-center disc ---
scene3 = make_synthetic_scene(grid, [Disc(0.06, -0.04, 0.22, 1.0)])
oracle3 = reference_edge_map(scene3, 2.0)
diam3 = grid.diameter
R3 = 100 * diam3
nyq = np.pi / grid.spacing_x
alt_frac = 0.3
eta = 1.0 / np.sqrt(1 + alt_frac**2)
for (flo, fhi, nr) in [(0.05, 0.45, 32), (0.04, 0.35, 32)]:
    fg3 = FrequencyGrid(np.linspace(flo, fhi, nr) * nyq * C / 2 / eta)
    traj3 = make_circular_trajectory(R3, alt_frac * R3, 8, scene_diameter=diam3)
    worst_m = worst_e = 0.0
    for n in range(8):
        xi = xi_samples(fg3, traj3, n)
        w = np.linalg.norm(xi, axis=1) ** 2
        fwd = build_forward_matrix(grid, traj3, n, fg3)
        lhs = w * (fwd.entries @ scene3.reflectivity_vector)
        rhs = fwd.entries @ oracle3.vector
        ex = apply_edge_filter(compensate_phase(
            simulate_pulse_exact(scene3, traj3, n, fg3), traj3, n, fg3), xi, 2.0)
        worst_m = max(worst_m, np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
        worst_e = max(worst_e, np.linalg.norm(ex - rhs) / np.linalg.norm(ex))
    print(f"commutation band [{flo},{fhi}] nr={nr}: matrix {worst_m:.3e}, exact-path {worst_e:.3e}")

# --- adjoint margin tuning ---
grid4 = ImagingGrid(0.5, 0.5, 32, 32)
scene4 = make_synthetic_scene(grid4, [Rectangle(0.0, 0.0, 0.5, 0.35, 1.0)])
p = 2.0
oracle4 = reference_edge_map(scene4, p).vector
diam4 = grid4.diameter
nyq4 = np.pi / grid4.spacing_x
for (lo, hi, nr, npulse, ratio, altf) in [
    (0.03, 0.98, 48, 128, 20, 0.25),
    (0.02, 0.98, 64, 192, 20, 0.25),
    (0.03, 0.95, 48, 192, 30, 0.2),
]:
    eta4 = 1 / np.sqrt(1 + altf**2)
    fr = np.sqrt(np.linspace(lo**2, hi**2, nr))
    fg4 = FrequencyGrid(fr * nyq4 * C / 2 / eta4)
    R4 = ratio * diam4
    traj4 = make_circular_trajectory(R4, altf * R4, npulse, scene_diameter=diam4)
    accum = np.zeros(grid4.n_pixels)
    for n in range(npulse):
        dt = compensate_phase(simulate_pulse_exact(scene4, traj4, n, fg4), traj4, n, fg4)
        xi = xi_samples(fg4, traj4, n)
        dbar = apply_edge_filter(dt, xi, p)
        fwd = build_forward_matrix(grid4, traj4, n, fg4)
        accum += np.real(fwd.entries.conj().T @ dbar)
    cc = np.corrcoef(accum, oracle4)[0, 1]
    print(f"adjoint band[{lo},{hi}] nr={nr} L={npulse} ratio={ratio}: corr {cc:.4f}")
