"""Command-line entry points.

Exit codes: 0 success, 2 configuration/usage error, 3 I/O or file-format
error, 4 numerical or geometry failure.  BLAS thread-count environment
variables (``OMP_NUM_THREADS`` and friends) are honored as usual and do
not change deterministic-mode results.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .config import ExperimentConfig
from .dictionary import coherence_report
from .errors import ConfigError, FormatError, SarEdgeError
from .formats import save_dictionary, save_raster_csv
from .pipeline import replay_pulses, run_experiment, simulate_to_dump, verify_config

logger = logging.getLogger(__name__)


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except (FormatError, OSError) as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(3)
        except SarEdgeError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _load_config(path, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(path)
    return cfg.with_overrides(**overrides)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable info-level logging.")
def main(verbose: bool):
    """Direct online edge mapping for monostatic SAR pulse streams."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@_handle_errors
def simulate(config_path, out_path, seed):
    """Simulate a pulse stream and write it to a binary dump."""
    cfg = _load_config(config_path, seed=seed)
    count = simulate_to_dump(cfg, out_path)
    click.echo(f"wrote {count} pulses to {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pulses", "pulse_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--deterministic", is_flag=True, default=None, help="Zero timing columns for reproducible CSVs.")
@click.option("--checkpoint-every", type=int, default=None, help="Checkpoint cadence in pulses.")
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False), default=None)
@_handle_errors
def reconstruct(config_path, pulse_path, out_dir, seed, deterministic, checkpoint_every, resume_path):
    """Reconstruct an edge map by streaming pulses from a dump."""
    cfg = _load_config(
        config_path,
        output_dir=out_dir,
        seed=seed,
        deterministic=deterministic,
        checkpoint_every=checkpoint_every,
    )
    result = run_experiment(cfg, pulse_source=replay_pulses(pulse_path), resume_path=resume_path)
    _echo_summary(result)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--deterministic", is_flag=True, default=None)
@click.option("--checkpoint-every", type=int, default=None)
@click.option("--resume", "resume_path", type=click.Path(exists=True, dir_okay=False), default=None)
@_handle_errors
def run(config_path, out_dir, seed, deterministic, checkpoint_every, resume_path):
    """Simulate and reconstruct end to end."""
    cfg = _load_config(
        config_path,
        output_dir=out_dir,
        seed=seed,
        deterministic=deterministic,
        checkpoint_every=checkpoint_every,
    )
    result = run_experiment(cfg, resume_path=resume_path)
    _echo_summary(result)


@main.command("inspect-dict")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--atom", "atom_indices", type=int, multiple=True, help="Atom index to export (repeatable).")
@click.option("--save-matrix", is_flag=True, help="Also persist the full dictionary in binary form.")
@_handle_errors
def inspect_dict(config_path, out_dir, atom_indices, save_matrix):
    """Summarize the configured edgelet dictionary and export atom rasters."""
    cfg = _load_config(config_path)
    grid = cfg.build_grid()
    dictionary = cfg.build_dictionary(grid)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = coherence_report(dictionary)
    click.echo(f"atoms: {dictionary.n_atoms} on a {grid.n_x}x{grid.n_y} grid")
    click.echo(f"max mutual coherence: {report.max_coherence:.4f}")
    hist = ", ".join(str(int(c)) for c in report.histogram)
    click.echo(f"coherence histogram (20 bins over [0, 1]): {hist}")
    for j in atom_indices:
        if not 0 <= j < dictionary.n_atoms:
            raise ConfigError(f"atom index {j} out of range [0, {dictionary.n_atoms})")
        save_raster_csv(out / f"atom_{j:05d}.csv", dictionary.atom_raster(j))
        click.echo(f"wrote atom {j} ({dictionary.atom_params[j]})")
    if save_matrix:
        save_dictionary(out / "dictionary.bin", dictionary)
        click.echo(f"wrote dictionary matrix to {out / 'dictionary.bin'}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@_handle_errors
def verify(config_path):
    """Run the oracle consistency checks on a configuration."""
    cfg = _load_config(config_path)
    ok, lines = verify_config(cfg)
    for line in lines:
        click.echo(line)
    if not ok:
        click.echo("verification FAILED", err=True)
        sys.exit(4)
    click.echo("verification passed")


def _echo_summary(result) -> None:
    if result.metrics:
        last = result.metrics[-1]
        click.echo(
            f"processed {len(result.metrics)} pulses: objective {last.objective:.6g}, "
            f"{last.nnz} nonzero coefficients, edge-map error {last.edge_map_rel_error:.4f}"
        )
    if result.output_dir is not None:
        click.echo(f"artifacts in {result.output_dir}")


if __name__ == "__main__":
    main()
