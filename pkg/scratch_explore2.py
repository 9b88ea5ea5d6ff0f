"""Scratch round 2: after sign fix; stencil breakdown; adjoint correlation."""
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

# --- far-field consistency after sign fix ---
grid2 = ImagingGrid(0.5, 0.5, 32, 32)
scene2 = make_synthetic_scene(grid2, [Rectangle(0.05, -0.08, 0.4, 0.3, 1.0)])
diam = grid2.diameter
for f_hz in (5e6, 1e7, 2e7, 5e7):
    fg = FrequencyGrid.from_band(f_hz, f_hz, 16)
    errs = []
    for ratio in (10, 30, 100):
        R = ratio * diam
        traj = make_circular_trajectory(R, 0.3 * R, 4, scene_diameter=diam)
        ff = simulate_pulse_farfield(scene2, traj, 1, fg)
        ex = compensate_phase(simulate_pulse_exact(scene2, traj, 1, fg), traj, 1, fg)
        errs.append(np.linalg.norm(ff - ex) / np.linalg.norm(ff))
    dec = errs[0] > errs[1] > errs[2]
    print(f"f={f_hz:.1e}: errs {[f'{e:.3e}' for e in errs]} decreasing={dec} ratio100<1e-3={errs[2]<1e-3}")

# --- stencil breakdown ---
grid = ImagingGrid(0.5, 0.5, 64, 64)
scene = make_synthetic_scene(grid, [Disc(0.0, 0.0, 0.25, 1.0)])
em = reference_edge_map(scene, 2.0).values
rho = scene.reflectivity
dx2, dy2 = grid.spacing_x**2, grid.spacing_y**2
st = -((np.roll(rho, 1, 1) + np.roll(rho, -1, 1) - 2 * rho) / dx2
       + (np.roll(rho, 1, 0) + np.roll(rho, -1, 0) - 2 * rho) / dy2)
plain = np.linalg.norm(em - st) / np.linalg.norm(st)
corr = np.vdot(em.ravel(), st.ravel()) / (np.linalg.norm(em) * np.linalg.norm(st))
alpha = np.vdot(st.ravel(), em.ravel()) / np.vdot(st.ravel(), st.ravel())
scaled = np.linalg.norm(em - alpha * st) / np.linalg.norm(em)
normed = np.linalg.norm(em / np.linalg.norm(em) - st / np.linalg.norm(st))
print(f"stencil: plain rel {plain:.3f}, corr {corr:.4f}, ls-scale alpha {alpha:.3f}, scaled resid {scaled:.3f}, unit-norm diff {normed:.3f}")
print(f"norm em {np.linalg.norm(em):.1f}, norm st {np.linalg.norm(st):.1f}")

# smoothed-scene comparison for insight
from numpy.fft import fft2, ifft2
kx = 2 * np.pi * np.fft.fftfreq(64, d=grid.spacing_x)
ky = 2 * np.pi * np.fft.fftfreq(64, d=grid.spacing_y)
K2 = kx[None, :]**2 + ky[:, None]**2
for sig_pix in (0.5, 0.75, 1.0, 1.5):
    sig = sig_pix * grid.spacing_x
    smooth = np.real(ifft2(fft2(rho) * np.exp(-0.5 * sig**2 * K2)))
    w = np.sqrt(K2)**2; w[0, 0] = 0
    em_s = np.real(ifft2(fft2(smooth) * w))
    st_s = -((np.roll(smooth, 1, 1) + np.roll(smooth, -1, 1) - 2 * smooth) / dx2
             + (np.roll(smooth, 1, 0) + np.roll(smooth, -1, 0) - 2 * smooth) / dy2)
    rel = np.linalg.norm(em_s - st_s) / np.linalg.norm(st_s)
    print(f"gauss-smoothed sigma={sig_pix}px: rel {rel:.3f}")

# --- adjoint accumulation correlation (filter_pulse derived example) ---
grid4 = ImagingGrid(0.5, 0.5, 32, 32)
scene4 = make_synthetic_scene(grid4, [Rectangle(0.0, 0.0, 0.5, 0.35, 1.0)])
p = 2.0
oracle4 = reference_edge_map(scene4, p).vector
diam4 = grid4.diameter
R4 = 20 * diam4
nyq4 = np.pi / grid4.spacing_x
for (lo, hi, nr, npulse, spacing) in [
    (0.03, 0.95, 48, 128, "sqrt"),
    (0.03, 0.95, 48, 128, "lin"),
    (0.03, 0.7, 32, 96, "sqrt"),
]:
    eta = 1 / np.sqrt(1 + 0.25**2)
    if spacing == "sqrt":
        fr = np.sqrt(np.linspace((lo)**2, (hi)**2, nr))
    else:
        fr = np.linspace(lo, hi, nr)
    omega = fr * nyq4 * C / 2 / eta
    fg4 = FrequencyGrid(omega)
    traj4 = make_circular_trajectory(R4, 0.25 * R4, npulse, scene_diameter=diam4)
    accum = np.zeros(grid4.n_pixels)
    for n in range(npulse):
        raw = simulate_pulse_exact(scene4, traj4, n, fg4)
        dt = compensate_phase(raw, traj4, n, fg4)
        xi = xi_samples(fg4, traj4, n)
        dbar = apply_edge_filter(dt, xi, p)
        fwd = build_forward_matrix(grid4, traj4, n, fg4)
        accum += np.real(fwd.entries.conj().T @ dbar)
    cc = np.corrcoef(accum, oracle4)[0, 1]
    print(f"adjoint {spacing} band[{lo},{hi}] nr={nr} L={npulse}: corr {cc:.4f}")
