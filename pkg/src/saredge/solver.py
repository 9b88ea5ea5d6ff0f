"""Streaming weighted-LASSO solver driven by sufficient statistics.

After pulse ``n`` the data enter the objective only through the Gram
accumulation ``A = sum_k G_k^H R_k^-1 G_k``, the correlation
``b = sum_k G_k^H R_k^-1 d_k``, and the scalar data energy
``e = sum_k d_k^H R_k^-1 d_k``:

    J(c) = 1/2 c^H A c - Re(b^H c) + e/2 + lam * ||c||_1

which is algebraically identical to the stacked weighted least-squares
objective, so the solver never needs a stored pulse.  FISTA minimizes J
with modulus soft-thresholding (phase-preserving for complex c), adaptive
restart on objective increase, and best-iterate selection.

Coefficients are complex by default.  The real-restricted mode solves the
real/imaginary-stacked system instead, whose Gram and correlation are
exactly ``Re(A)`` and ``Re(b)``, so the same statistics serve both modes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import NumericalError, SarEdgeError
from .forward import NoiseCovariance

logger = logging.getLogger(__name__)

_POWER_RTOL = 1e-6
_POWER_SAFETY = 1.01


class SufficientStats:
    """Streaming statistics (A, b, pulse count, data energy) for the solver.

    ``update`` mutates in place: the whole point of the representation is
    that its memory footprint is fixed while pulses stream through.
    """

    def __init__(self, n_coeffs: int):
        self.A = np.zeros((n_coeffs, n_coeffs), dtype=complex)
        self.b = np.zeros(n_coeffs, dtype=complex)
        self.pulse_count = 0
        self.data_energy = 0.0
        self._power_vector: Optional[np.ndarray] = None  # warm start for power iteration

    @property
    def dim(self) -> int:
        return self.b.size

    def validate(self, rtol: float = 1e-12) -> None:
        """Check the Hermitian / PSD / energy invariants (test and debug hook)."""
        scale = max(float(np.linalg.norm(self.A)), 1e-300)
        if np.linalg.norm(self.A - self.A.conj().T) > rtol * scale:
            raise NumericalError("sufficient statistics lost Hermitian symmetry")
        if self.pulse_count > 0:
            smallest = float(np.linalg.eigvalsh(self.A)[0])
            if smallest < -1e-10 * scale:
                raise NumericalError(f"A has negative eigenvalue {smallest:g}")
        if self.data_energy < 0:
            raise NumericalError("data energy became negative")


@dataclass(frozen=True)
class SolverConfig:
    """Regularization and iteration controls for the FISTA solver."""

    lam: float
    max_iters: int = 5000
    rel_tol: float = 1e-9
    lipschitz_mode: str = "spectral"  # or "power"
    power_iters: int = 200
    warm_start: bool = True
    real_coefficients: bool = False

    def __post_init__(self):
        if self.lam <= 0:
            raise SarEdgeError("lambda must be positive")
        if self.rel_tol <= 0:
            raise SarEdgeError("rel_tol must be positive")
        if self.max_iters < 1:
            raise SarEdgeError("max_iters must be >= 1")
        if self.lipschitz_mode not in ("spectral", "power"):
            raise SarEdgeError(f"unknown lipschitz_mode {self.lipschitz_mode!r}")


@dataclass(frozen=True)
class Coefficients:
    """Solver output: coefficient vector plus convergence diagnostics."""

    c: np.ndarray
    objective_value: float
    iterations_used: int
    converged: bool

    def __post_init__(self):
        c = np.asarray(self.c)
        if not np.isfinite(self.objective_value):
            raise NumericalError("objective value is not finite")
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.c))


# ---------------------------------------------------------------------------
# Statistics accumulation
# ---------------------------------------------------------------------------
def update_stats(
    stats: SufficientStats, G: np.ndarray, cov: NoiseCovariance, d: np.ndarray
) -> SufficientStats:
    """Fold one pulse into the statistics; the pulse can then be dropped.

    Applies the inverse covariance through a factorization solve and
    re-symmetrizes A after accumulation so rounding never breaks the
    Hermitian invariant.  Mutates and returns ``stats``.
    """
    G = np.asarray(G, dtype=complex)
    d = np.asarray(d, dtype=complex).ravel()
    if G.ndim != 2 or G.shape[1] != stats.dim:
        raise SarEdgeError(f"operator shape {G.shape} does not match statistics dim {stats.dim}")
    if d.size != G.shape[0]:
        raise SarEdgeError("data length does not match operator rows")
    rinv_g = cov.solve(G)
    rinv_d = cov.solve(d)
    stats.A += G.conj().T @ rinv_g
    stats.A += stats.A.conj().T
    stats.A *= 0.5
    stats.b += G.conj().T @ rinv_d
    stats.data_energy += float(np.real(np.vdot(d, rinv_d)))
    stats.pulse_count += 1
    return stats


# ---------------------------------------------------------------------------
# Objective, gradient, Lipschitz bound
# ---------------------------------------------------------------------------
def _effective_system(stats: SufficientStats, real: bool) -> Tuple[np.ndarray, np.ndarray]:
    if real:
        return stats.A.real, stats.b.real
    return stats.A, stats.b


def objective(stats: SufficientStats, c: np.ndarray, lam: float) -> float:
    """Weighted-LASSO objective evaluated from the statistics alone.

    A real-dtype ``c`` selects the real-restricted (stacked) formulation.
    """
    c = np.asarray(c).ravel()
    a_eff, b_eff = _effective_system(stats, not np.iscomplexobj(c))
    quad = 0.5 * float(np.real(np.vdot(c, a_eff @ c)))
    lin = float(np.real(np.vdot(b_eff, c)))
    return quad - lin + 0.5 * stats.data_energy + lam * float(np.sum(np.abs(c)))


def gradient(stats: SufficientStats, c: np.ndarray) -> np.ndarray:
    """Gradient of the smooth part: ``A c - b`` (real projection in real mode)."""
    c = np.asarray(c).ravel()
    a_eff, b_eff = _effective_system(stats, not np.iscomplexobj(c))
    return a_eff @ c - b_eff


def lipschitz_constant(
    stats: SufficientStats,
    mode: str = "spectral",
    power_iters: int = 200,
    real: bool = False,
) -> float:
    """Spectral norm of A (a valid Lipschitz constant for the gradient).

    ``spectral`` uses a dense Hermitian eigensolve.  ``power`` runs power
    iteration (warm-started from the previous call's eigenvector) to
    relative tolerance 1e-6 within its budget and inflates the estimate by
    1% to preserve the majorization inequality.
    """
    a_eff, _ = _effective_system(stats, real)
    scale = float(np.linalg.norm(a_eff))
    if scale == 0.0:
        logger.warning("Lipschitz bound requested for zero statistics; solver degenerates to pure shrinkage")
        return 0.0
    if not np.isfinite(scale):
        raise NumericalError("accumulated statistics overflowed; Lipschitz bound is not finite")
    if mode == "spectral":
        try:
            bound = max(float(np.linalg.eigvalsh(a_eff)[-1]), 0.0)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolve failed on the accumulated statistics: {exc}") from exc
        if not np.isfinite(bound):
            raise NumericalError("spectral Lipschitz bound is not finite")
        return bound
    if mode != "power":
        raise SarEdgeError(f"unknown lipschitz mode {mode!r}")
    v = stats._power_vector
    if v is None or v.shape[0] != stats.dim:
        v = np.random.default_rng(0).standard_normal(stats.dim) + 0j
    v = v / np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max(power_iters, 1)):
        w = a_eff @ v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            break
        v = w / norm_w
        new_estimate = float(np.real(np.vdot(v, a_eff @ v)))
        if estimate > 0 and abs(new_estimate - estimate) <= _POWER_RTOL * new_estimate:
            estimate = new_estimate
            break
        estimate = new_estimate
    if not np.isfinite(estimate):
        raise NumericalError("power iteration diverged; statistics may have overflowed")
    stats._power_vector = v
    return estimate * _POWER_SAFETY


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Modulus shrinkage: preserves phase (sign), shrinks magnitude, exact zeros below tau."""
    if tau < 0:
        raise SarEdgeError("threshold must be nonnegative")
    v = np.asarray(v)
    mag = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > 0, np.maximum(0.0, 1.0 - tau / mag), 0.0)
    return v * scale


def kkt_violation(stats: SufficientStats, c: np.ndarray, lam: float) -> float:
    """Worst subgradient-condition violation at ``c``, as a multiple of lambda.

    Zero entries require ``|grad_j| <= lam``; nonzero entries require
    ``grad_j + lam * c_j / |c_j| = 0``.  Returns the max violation / lam.
    """
    c = np.asarray(c).ravel()
    g = gradient(stats, c)
    zero = c == 0
    worst = 0.0
    if np.any(zero):
        worst = max(worst, float((np.abs(g[zero]).max() - lam) / lam))
    if np.any(~zero):
        cj = c[~zero]
        resid = g[~zero] + lam * cj / np.abs(cj)
        worst = max(worst, float(np.abs(resid).max() / lam))
    return max(worst, 0.0)


# ---------------------------------------------------------------------------
# FISTA
# ---------------------------------------------------------------------------
def fista_solve(
    stats: SufficientStats, config: SolverConfig, init: Optional[Coefficients] = None
) -> Coefficients:
    """Minimize the weighted LASSO from sufficient statistics with FISTA.

    Momentum follows the classic schedule ``t+ = (1 + sqrt(1 + 4 t^2)) / 2``
    with adaptive restart whenever the objective increases; the returned
    iterate is the best objective seen, so the output never degrades the
    warm start.  ``lam > max|b|`` short-circuits to the exact zero solution
    (its KKT conditions hold with slack), as does a zero Lipschitz bound.
    """
    real = config.real_coefficients
    dtype = float if real else complex
    lam = config.lam
    a_eff, b_eff = _effective_system(stats, real)

    if init is not None:
        c = np.asarray(init.c).ravel()
        if c.size != stats.dim:
            raise SarEdgeError("warm-start length does not match statistics dim")
        c = c.real.astype(float) if real else c.astype(complex)
    else:
        c = np.zeros(stats.dim, dtype=dtype)

    def full_objective(vec):
        quad = 0.5 * float(np.real(np.vdot(vec, a_eff @ vec)))
        lin = float(np.real(np.vdot(b_eff, vec)))
        return quad - lin + 0.5 * stats.data_energy + lam * float(np.sum(np.abs(vec)))

    zero = np.zeros(stats.dim, dtype=dtype)
    if lam > float(np.max(np.abs(b_eff), initial=0.0)):
        return Coefficients(zero, full_objective(zero), 0, True)

    L = lipschitz_constant(stats, config.lipschitz_mode, config.power_iters, real=real)
    if L <= 0.0:
        return Coefficients(zero, full_objective(zero), 0, True)

    step = 1.0 / L
    y = c.copy()
    t = 1.0
    obj_prev = full_objective(c)
    best_c, best_obj = c.copy(), obj_prev
    iterations = 0
    converged = False
    for it in range(1, config.max_iters + 1):
        stepped = y - step * (a_eff @ y - b_eff)
        if not np.all(np.isfinite(stepped)):
            raise NumericalError(f"non-finite coefficients at FISTA iteration {it}")
        c_new = soft_threshold(stepped, step * lam)
        obj_new = full_objective(c_new)
        if obj_new < best_obj:
            best_c, best_obj = c_new.copy(), obj_new
        if obj_new > obj_prev:
            # adaptive restart: drop accumulated momentum
            t = 1.0
            y = c_new.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = c_new + ((t - 1.0) / t_next) * (c_new - c)
            t = t_next
        rel_change = float(np.linalg.norm(c_new - c)) / max(1.0, float(np.linalg.norm(c_new)))
        c = c_new
        obj_prev = obj_new
        iterations = it
        if rel_change < config.rel_tol:
            converged = True
            break
    return Coefficients(best_c, best_obj, iterations, converged)


def online_step(
    stats: SufficientStats,
    G: np.ndarray,
    cov: NoiseCovariance,
    d: np.ndarray,
    config: SolverConfig,
    prev: Optional[Coefficients] = None,
) -> Tuple[SufficientStats, Coefficients]:
    """Absorb one pulse and re-solve, warm-started from the previous solution.

    After the call the complete solver state is ``(A, b, e, c)``: the pulse
    itself is never retained.
    """
    update_stats(stats, G, cov, d)
    init = prev if (config.warm_start and prev is not None) else None
    return stats, fista_solve(stats, config, init=init)
