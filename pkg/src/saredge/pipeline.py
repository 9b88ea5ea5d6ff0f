"""End-to-end experiment orchestration.

The reconstruction loop is strictly streaming: pulses come out of a
generator, are folded into the sufficient statistics, and are dropped.
At any instant the process holds one pulse plus (A, b, c), so memory is
independent of how many pulses the mission collects.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .config import ExperimentConfig
from .dictionary import EdgeletDictionary, compose_measurement_operator
from .edgefilter import (
    EdgeMap,
    apply_edge_filter,
    edge_measurement_from_record,
    edge_weights,
    reference_edge_map,
)
from .errors import ConfigError, NumericalError
from .formats import (
    iter_pulse_dump,
    load_checkpoint,
    save_checkpoint,
    save_raster_binary,
    save_raster_csv,
    write_pulse_dump,
)
from .forward import NoiseCovariance, PulseRecord, add_noise, forward_matrix_at, simulate_pulse_exact
from .geometry import (
    FrequencyGrid,
    GroundScene,
    ImagingGrid,
    PlatformTrajectory,
    xi_samples_for_position,
)
from .solver import Coefficients, SufficientStats, fista_solve, kkt_violation, objective, update_stats

logger = logging.getLogger(__name__)

# Binarization level for support precision/recall: 10% of the peak magnitude,
# applied to oracle and reconstruction alike so the metric is reproducible.
SUPPORT_THRESHOLD = 0.1

METRICS_FIELDS = (
    "pulse",
    "objective",
    "nnz",
    "edge_map_rel_error",
    "support_precision",
    "support_recall",
    "iterations",
    "wall_ms",
)


@dataclass(frozen=True)
class MetricsRow:
    """Per-pulse reconstruction quality and cost figures."""

    pulse: int
    objective: float
    nnz: int
    edge_map_rel_error: float
    support_precision: float
    support_recall: float
    iterations: int
    wall_ms: float

    def as_tuple(self) -> tuple:
        return (
            self.pulse,
            self.objective,
            self.nnz,
            self.edge_map_rel_error,
            self.support_precision,
            self.support_recall,
            self.iterations,
            self.wall_ms,
        )


@dataclass
class ExperimentResult:
    """Everything run_experiment leaves behind, in memory and on disk."""

    config: ExperimentConfig
    metrics: list
    coefficients: Optional[Coefficients]
    stats: SufficientStats
    lam: float
    oracle_edge_map: EdgeMap
    reconstruction: np.ndarray  # (n_y, n_x)
    output_dir: Optional[Path]


# ---------------------------------------------------------------------------
# Pulse sources
# ---------------------------------------------------------------------------
def simulate_pulses(
    scene: GroundScene,
    traj: PlatformTrajectory,
    freq_grid: FrequencyGrid,
    noise_cov: NoiseCovariance,
    base_seed: int,
) -> Iterator[PulseRecord]:
    """Exact-range simulation, one pulse at a time.

    The noise seed is ``base_seed + n`` so any pulse can be regenerated
    independently (checkpoint resume relies on this).
    """
    for n in range(traj.n_pulses):
        clean = simulate_pulse_exact(scene, traj, n, freq_grid)
        data = add_noise(clean, noise_cov, base_seed + n)
        yield PulseRecord(
            slow_time_index=n,
            platform_position=traj.position(n),
            freq_grid=freq_grid,
            data=data,
            noise_cov=noise_cov,
        )


def replay_pulses(dump_path) -> Iterator[PulseRecord]:
    """Stream stored pulses; downstream results match live simulation bit for bit."""
    return iter_pulse_dump(dump_path)


# ---------------------------------------------------------------------------
# Online reconstruction
# ---------------------------------------------------------------------------
class OnlineReconstructor:
    """Streaming state machine: consumes pulses, keeps only (A, b, c).

    When the configured regularization is ``None`` it resolves to
    ``0.01 * max|b|`` after the first pulse (falling back to 1.0 for an
    all-zero first pulse, where the solution is 0 regardless).
    """

    def __init__(
        self,
        grid: ImagingGrid,
        dictionary: EdgeletDictionary,
        config: ExperimentConfig,
        oracle: Optional[EdgeMap] = None,
    ):
        self.grid = grid
        self.dictionary = dictionary
        self.config = config
        self.oracle = oracle
        self.stats = SufficientStats(dictionary.n_atoms)
        self.lam: Optional[float] = config.solver_lambda
        self.coefficients: Optional[Coefficients] = None
        if oracle is not None:
            oracle_abs = np.abs(oracle.vector)
            self._oracle_norm = float(np.linalg.norm(oracle.vector))
            self._oracle_support = oracle_abs >= SUPPORT_THRESHOLD * oracle_abs.max() if oracle_abs.max() > 0 else oracle_abs > 0

    def step(self, record: PulseRecord) -> MetricsRow:
        """Fold one pulse into the statistics and re-solve."""
        t0 = time.perf_counter()
        p = self.config.edge_order
        measurement = edge_measurement_from_record(record, p)
        fwd = forward_matrix_at(
            self.grid, record.platform_position, record.freq_grid, pulse_index=record.slow_time_index
        )
        weights = edge_weights(measurement.xi_points, p)
        op = compose_measurement_operator(fwd, self.dictionary, weights)
        try:
            update_stats(self.stats, op.entries, measurement.noise_cov, measurement.data)
            if self.lam is None:
                peak = float(np.max(np.abs(self.stats.b)))
                self.lam = 0.01 * peak if peak > 0 else 1.0
                logger.info("auto regularization lambda = %.6g", self.lam)
            solver_cfg = self.config.solver_config(self.lam)
            init = self.coefficients if solver_cfg.warm_start else None
            self.coefficients = fista_solve(self.stats, solver_cfg, init=init)
        except NumericalError as exc:
            raise NumericalError(f"pulse {record.slow_time_index}: {exc}") from exc
        wall_ms = 0.0 if self.config.deterministic else (time.perf_counter() - t0) * 1e3
        return self._metrics_row(record.slow_time_index, wall_ms)

    def _metrics_row(self, pulse: int, wall_ms: float) -> MetricsRow:
        coeffs = self.coefficients
        rel_error = float("nan")
        precision = recall = float("nan")
        if self.oracle is not None:
            recon = np.real(self.dictionary.atoms @ coeffs.c)
            if self._oracle_norm > 0:
                rel_error = float(np.linalg.norm(recon - self.oracle.vector)) / self._oracle_norm
            recon_abs = np.abs(recon)
            support = recon_abs >= SUPPORT_THRESHOLD * recon_abs.max() if recon_abs.max() > 0 else recon_abs > 0
            true_pos = int(np.count_nonzero(support & self._oracle_support))
            n_pred = int(np.count_nonzero(support))
            n_true = int(np.count_nonzero(self._oracle_support))
            precision = true_pos / n_pred if n_pred else 1.0
            recall = true_pos / n_true if n_true else 1.0
        return MetricsRow(
            pulse=pulse,
            objective=coeffs.objective_value,
            nnz=coeffs.n_nonzero,
            edge_map_rel_error=rel_error,
            support_precision=precision,
            support_recall=recall,
            iterations=coeffs.iterations_used,
            wall_ms=wall_ms,
        )

    def reconstruction_raster(self) -> np.ndarray:
        if self.coefficients is None:
            return np.zeros((self.grid.n_y, self.grid.n_x))
        return np.real(self.dictionary.atoms @ self.coefficients.c).reshape(self.grid.n_y, self.grid.n_x)

    # --- checkpointing ---
    def save_checkpoint(self, path) -> None:
        c = self.coefficients.c if self.coefficients is not None else np.zeros(self.stats.dim, dtype=complex)
        save_checkpoint(path, self.stats, self.lam if self.lam is not None else 0.0, c)

    def restore(self, path) -> None:
        """Load a checkpoint; the caller must skip the already-processed pulses."""
        stats, lam, c = load_checkpoint(path)
        if stats.dim != self.dictionary.n_atoms:
            raise ConfigError(
                f"checkpoint dimension {stats.dim} does not match dictionary atom count {self.dictionary.n_atoms}"
            )
        self.stats = stats
        self.lam = lam if lam > 0 else None
        if self.config.solver_real_coefficients:
            c = c.real
        self.coefficients = Coefficients(
            c=c,
            objective_value=objective(stats, c, self.lam) if self.lam else 0.0,
            iterations_used=0,
            converged=True,
        )


def reconstruct_stream(
    pulses: Iterable[PulseRecord],
    reconstructor: OnlineReconstructor,
    checkpoint_every: int = 0,
    checkpoint_path=None,
    skip: int = 0,
) -> list:
    """Drive the reconstructor over a pulse stream; returns the metrics rows.

    ``skip`` consumes (without processing) pulses already folded into a
    restored checkpoint.
    """
    metrics = []
    processed = reconstructor.stats.pulse_count
    for record in pulses:
        if skip > 0:
            skip -= 1
            continue
        metrics.append(reconstructor.step(record))
        processed += 1
        if checkpoint_every and checkpoint_path is not None and processed % checkpoint_every == 0:
            reconstructor.save_checkpoint(checkpoint_path)
    return metrics


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------
def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_metrics_csv(metrics: Iterable[MetricsRow], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_FIELDS)
        for row in metrics:
            writer.writerow([_fmt(v) for v in row.as_tuple()])


def load_metrics_csv(path) -> list:
    rows = []
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        for rec in reader:
            rows.append(
                MetricsRow(
                    pulse=int(rec["pulse"]),
                    objective=float(rec["objective"]),
                    nnz=int(rec["nnz"]),
                    edge_map_rel_error=float(rec["edge_map_rel_error"]),
                    support_precision=float(rec["support_precision"]),
                    support_recall=float(rec["support_recall"]),
                    iterations=int(rec["iterations"]),
                    wall_ms=float(rec["wall_ms"]),
                )
            )
    return rows


def emit_plot_data(metrics: list, out_dir, rasters: Optional[dict] = None) -> list:
    """Write plotting-friendly CSVs: objective trace, error curve, paired rasters.

    Raster values are written in both the CSV and binary raster formats.
    Returns the list of paths written.  I/O errors surface verbatim.
    """
    if not metrics:
        raise ConfigError("no metrics rows to emit")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    trace_path = out_dir / "objective_trace.csv"
    with open(trace_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["pulse", "objective"])
        for row in metrics:
            writer.writerow([row.pulse, _fmt(row.objective)])
    written.append(trace_path)

    err_path = out_dir / "error_vs_pulses.csv"
    with open(err_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["pulse", "edge_map_rel_error"])
        for row in metrics:
            writer.writerow([row.pulse, _fmt(row.edge_map_rel_error)])
    written.append(err_path)

    for name, raster in (rasters or {}).items():
        csv_path = out_dir / f"{name}.csv"
        bin_path = out_dir / f"{name}.bin"
        save_raster_csv(csv_path, raster)
        save_raster_binary(bin_path, raster)
        written.extend([csv_path, bin_path])
    return written


# ---------------------------------------------------------------------------
# End-to-end experiment
# ---------------------------------------------------------------------------
def run_experiment(
    config: ExperimentConfig,
    pulse_source: Optional[Iterable[PulseRecord]] = None,
    resume_path=None,
) -> ExperimentResult:
    """Simulate (or replay), reconstruct online, and write all artifacts.

    Artifacts: ground-truth scene raster, oracle edge map, reconstructed
    edge map, per-pulse metrics CSV, objective trace CSV, final checkpoint.
    """
    grid = config.build_grid()
    scene = config.build_scene(grid)
    freq_grid = config.build_freq_grid()
    dictionary = config.build_dictionary(grid)
    oracle = reference_edge_map(scene, config.edge_order)
    logger.info(
        "experiment: grid %dx%d, %d atoms, %d pulses",
        grid.n_x,
        grid.n_y,
        dictionary.n_atoms,
        config.trajectory_pulse_count,
    )

    if pulse_source is None:
        traj = config.build_trajectory(grid)
        pulse_source = simulate_pulses(scene, traj, freq_grid, config.noise_covariance(), config.seed)

    reconstructor = OnlineReconstructor(grid, dictionary, config, oracle=oracle)
    skip = 0
    if resume_path is not None:
        reconstructor.restore(resume_path)
        skip = reconstructor.stats.pulse_count
        logger.info("resumed from checkpoint after %d pulses", skip)

    out_dir = Path(config.output_dir) if config.output_dir else None
    checkpoint_path = out_dir / "checkpoint.bin" if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_raster_csv(out_dir / "scene.csv", scene.reflectivity)
        save_raster_binary(out_dir / "scene.bin", scene.reflectivity)
        save_raster_csv(out_dir / "edge_map_oracle.csv", oracle.values)
        save_raster_binary(out_dir / "edge_map_oracle.bin", oracle.values)

    metrics = reconstruct_stream(
        pulse_source,
        reconstructor,
        checkpoint_every=config.checkpoint_every,
        checkpoint_path=checkpoint_path,
        skip=skip,
    )

    recon = reconstructor.reconstruction_raster()
    if out_dir is not None:
        save_raster_csv(out_dir / "edge_map_recon.csv", recon)
        save_raster_binary(out_dir / "edge_map_recon.bin", recon)
        emit_metrics_csv(metrics, out_dir / "metrics.csv")
        if metrics:
            emit_plot_data(metrics, out_dir)
        if checkpoint_path is not None:
            reconstructor.save_checkpoint(checkpoint_path)

    return ExperimentResult(
        config=config,
        metrics=metrics,
        coefficients=reconstructor.coefficients,
        stats=reconstructor.stats,
        lam=reconstructor.lam if reconstructor.lam is not None else 0.0,
        oracle_edge_map=oracle,
        reconstruction=recon,
        output_dir=out_dir,
    )


def simulate_to_dump(config: ExperimentConfig, dump_path) -> int:
    """Run the simulator only and persist the pulse stream."""
    grid = config.build_grid()
    scene = config.build_scene(grid)
    traj = config.build_trajectory(grid)
    freq_grid = config.build_freq_grid()
    pulses = simulate_pulses(scene, traj, freq_grid, config.noise_covariance(), config.seed)
    return write_pulse_dump(dump_path, freq_grid, pulses)


# ---------------------------------------------------------------------------
# Config-level verification battery
# ---------------------------------------------------------------------------
def verify_config(config: ExperimentConfig, n_pulses: int = 4) -> tuple:
    """Run fast oracle checks on the configured geometry; returns (ok, report lines).

    Covers: forward-matrix double-loop equivalence, matrix modulus, edge
    filter scaling, dictionary normalization, streaming-equals-batch
    statistics, and the KKT certificate of a small solve.
    """
    lines = []
    ok = True

    def record(name, passed, detail=""):
        nonlocal ok
        ok = ok and passed
        suffix = f" ({detail})" if detail else ""
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}{suffix}")

    grid = config.build_grid()
    scene = config.build_scene(grid)
    traj = config.build_trajectory(grid)
    freq_grid = config.build_freq_grid()
    n_check = min(n_pulses, traj.n_pulses)

    # forward matrix vs scalar double loop on a decimated grid
    small = ImagingGrid(grid.extent_x, grid.extent_y, 8, 8)
    rng = np.random.default_rng(config.seed)
    rho = rng.standard_normal(small.n_pixels)
    worst = 0.0
    for n in range(n_check):
        fwd = forward_matrix_at(small, traj.position(n), freq_grid, pulse_index=n)
        direct = fwd.entries @ rho
        looped = np.zeros(freq_grid.n_samples, dtype=complex)
        xi = xi_samples_for_position(freq_grid, traj.position(n))
        for m in range(freq_grid.n_samples):
            acc = 0.0 + 0.0j
            for i, center in enumerate(small.pixel_centers):
                acc += rho[i] * np.exp(-1j * (center @ xi[m]))
            looped[m] = acc * small.pixel_area
        worst = max(worst, float(np.linalg.norm(direct - looped) / np.linalg.norm(looped)))
    record("forward matrix matches double-loop oracle", worst <= 1e-12, f"rel err {worst:.2e}")

    moduli = np.abs(forward_matrix_at(small, traj.position(0), freq_grid).entries)
    mod_err = float(np.max(np.abs(moduli - small.pixel_area)))
    record("forward entries have pixel-area modulus", mod_err <= 1e-12 * small.pixel_area, f"max dev {mod_err:.2e}")

    # edge filter homogeneity
    xi = xi_samples_for_position(freq_grid, traj.position(0))
    vec = rng.standard_normal(freq_grid.n_samples) + 1j * rng.standard_normal(freq_grid.n_samples)
    lhs = apply_edge_filter(3.0 * vec, xi, config.edge_order)
    rhs = 3.0 * apply_edge_filter(vec, xi, config.edge_order)
    record("edge filter is homogeneous", bool(np.array_equal(lhs, rhs)))

    dictionary = config.build_dictionary(grid)
    norms = np.linalg.norm(dictionary.atoms, axis=0)
    means = dictionary.atoms.mean(axis=0)
    record(
        "dictionary atoms unit-norm and zero-mean",
        bool(np.max(np.abs(norms - 1)) < 1e-9 and np.max(np.abs(means)) < 1e-12),
        f"{dictionary.n_atoms} atoms",
    )

    # streaming equals batch on a few pulses
    cov = config.noise_covariance()
    records = []
    for n in range(n_check):
        clean = simulate_pulse_exact(scene, traj, n, freq_grid)
        data = add_noise(clean, cov, config.seed + n)
        records.append(PulseRecord(n, traj.position(n), freq_grid, data, cov))
    stats = SufficientStats(dictionary.n_atoms)
    ops = []
    for rec in records:
        em = edge_measurement_from_record(rec, config.edge_order)
        fwd = forward_matrix_at(grid, rec.platform_position, freq_grid, pulse_index=rec.slow_time_index)
        op = compose_measurement_operator(fwd, dictionary, edge_weights(em.xi_points, config.edge_order))
        ops.append((op.entries, em.noise_cov, em.data))
        update_stats(stats, op.entries, em.noise_cov, em.data)
    batch_a = sum(g.conj().T @ c.solve(g) for g, c, _ in ops)
    batch_b = sum(g.conj().T @ c.solve(d) for g, c, d in ops)
    a_err = float(np.linalg.norm(stats.A - batch_a) / max(np.linalg.norm(batch_a), 1e-300))
    b_err = float(np.linalg.norm(stats.b - batch_b) / max(np.linalg.norm(batch_b), 1e-300))
    record("streaming statistics equal batch", a_err <= 1e-12 and b_err <= 1e-12, f"A {a_err:.2e}, b {b_err:.2e}")

    lam = config.solver_lambda or 0.01 * float(np.max(np.abs(stats.b))) or 1.0
    coeffs = fista_solve(stats, config.solver_config(lam))
    kkt = kkt_violation(stats, coeffs.c, lam)
    record("solver KKT certificate", kkt <= 1e-4, f"violation {kkt:.2e} of lambda")

    return ok, lines
