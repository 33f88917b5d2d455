"""krusco command line: synth, fit, reconstruct, metrics."""

import json
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Iterator, Optional, Tuple

import click
import numpy as np
import structlog
from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from krusco import __version__
from krusco.config.settings import settings
from krusco.driver.engine import (
    ACTIVATION_INITS,
    BALANCE_RULES,
    FitResult,
    FitTrace,
    KcscConfig,
    config_summary,
    fit_model,
)
from krusco.driver.experiments import alpha_grid, parse_rank_range, rank_sweep
from krusco.driver.metrics import (
    compute_metrics,
    metrics_schema,
    model_reconstruction,
    residual_report,
)
from krusco.driver.synthetic import generate_synthetic
from krusco.exceptions import KruscoError, StructuralError
from krusco.storage.model_files import (
    ModelInfo,
    SynthManifest,
    read_dictionary,
    read_manifest,
    read_model,
    write_activations,
    write_dictionary,
    write_json,
    write_manifest,
    write_model,
)
from krusco.storage.run_config import RunConfig, SynthConfig, parse_list
from krusco.storage.tensor_files import read_tensor, write_tensor
from krusco.utils.logging import setup_logging

logger = structlog.get_logger(__name__)

EXIT_CONFIG = 2
EXIT_IO = 3

PathArg = click.Path(path_type=Path)
ExistingPath = click.Path(exists=True, path_type=Path)
ExistingDir = click.Path(exists=True, file_okay=False, path_type=Path)


@contextmanager
def _command(name: str) -> Iterator[None]:
    """Thread cap from KRUSCO_THREADS plus the exit-code contract"""
    try:
        with threadpool_limits(limits=settings.threads):
            yield
    except KruscoError as exc:
        logger.error("Command failed", command=name, error=str(exc),
                     error_type=type(exc).__name__)
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except ValidationError as exc:
        logger.error("Invalid configuration", command=name, error=str(exc))
        click.echo(f"error: invalid configuration: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        logger.error("I/O failure", command=name, error=str(exc))
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


def _load_signal(rc: RunConfig) -> Tuple[np.ndarray, RunConfig]:
    """Read Y from a tensor file or a synthetic directory.

    Manifest sizes fill the flags left unset.
    """
    if rc.input is None:
        raise click.UsageError("an input tensor or synthetic directory is required")
    if rc.input.is_dir():
        manifest = read_manifest(rc.input)
        rc = rc.with_defaults(manifest.n_atoms, manifest.rank, manifest.atom_shape)
        return read_tensor(rc.input / manifest.signal), rc
    return read_tensor(rc.input), rc


def _write_fit(out: Path, y: np.ndarray, cfg: KcscConfig, result: FitResult) -> None:
    dictionary, acts, trace = result
    info = ModelInfo(
        model=trace.model,
        signal_shape=list(y.shape),
        config=config_summary(cfg),
        loops=trace.loops_completed,
        stop_reason=trace.stop_reason,
        init_positions=[list(position) for position in trace.init_positions],
        initial_alpha_max=list(trace.initial_alpha_max),
    )
    write_model(out, dictionary, acts, info)
    trace.to_frame().to_csv(out / "trace.csv", index=False)
    report = compute_metrics(y, result, cfg)
    write_json(out / "metrics.json", report)
    write_json(out / "metrics.schema.json", metrics_schema())
    click.echo(
        f"{trace.model}: objective={report.objective:.6g} "
        f"l2_distance={report.l2_distance:.6g} "
        f"nnz={report.nnz_total} loops={report.loops} ({trace.stop_reason})"
    )


@click.group()
@click.version_option(version=__version__, prog_name="krusco")
@click.option("--log-level", default=None, help="Override KRUSCO_LOG_LEVEL")
def main(log_level: Optional[str]):
    """Kruskal convolutional sparse coding."""
    setup_logging(log_level)


@main.command()
@click.option("--out", "out", type=PathArg, required=True, help="Output directory")
@click.option("--config", "config_path", type=ExistingPath, default=None,
              help="JSON file with synth parameters")
@click.option("--atoms", type=int, default=None, help="Number of atoms K")
@click.option("--rank", type=int, default=None, help="Planted CP rank")
@click.option("--atom-shape", default=None, help="w1,w2,...")
@click.option("--signal-shape", default=None, help="n1,n2,...")
@click.option("--density", type=float, default=None,
              help="Probability of a nonzero factor entry")
@click.option("--noise", type=float, default=None,
              help="Gaussian noise standard deviation")
@click.option("--seed", type=int, default=None)
def synth(out: Path, config_path: Optional[Path], atoms: Optional[int],
          rank: Optional[int], atom_shape: Optional[str], signal_shape: Optional[str],
          density: Optional[float], noise: Optional[float], seed: Optional[int]):
    """Write a planted instance: y.npy, truth_dict/, truth_acts/, manifest.json."""
    with _command("synth"):
        sc = SynthConfig.from_file(config_path).with_overrides(
            out=out,
            atoms=atoms,
            rank=rank,
            atom_shape=parse_list(atom_shape, int),
            signal_shape=parse_list(signal_shape, int),
            density=density,
            noise=noise,
            seed=seed,
        )
        spec = sc.to_spec()
        data = generate_synthetic(spec, sc.seed)

        manifest = SynthManifest(
            seed=sc.seed,
            n_atoms=spec.n_atoms,
            rank=spec.rank,
            atom_shape=list(spec.atom_shape),
            signal_shape=list(spec.signal_shape),
            activation_shape=list(spec.activation_shape),
            density=spec.density,
            noise_sigma=spec.noise_sigma,
            std_range=spec.std_range,
        )
        write_tensor(out / manifest.signal, data.y)
        write_dictionary(out / manifest.dictionary, data.dictionary)
        write_activations(out / manifest.activations, data.activations)
        write_manifest(out, manifest)
        click.echo(f"synthetic instance {tuple(data.y.shape)} written to {out}")


@main.command()
@click.argument("input_path", metavar="INPUT", type=ExistingPath)
@click.option("--out", type=PathArg, default=None, help="Output directory")
@click.option("--config", "config_path", type=ExistingPath, default=None,
              help="JSON run configuration; flags override it")
@click.option("--rank", type=int, default=None,
              help="CP rank R of every activation tensor")
@click.option("--atoms", type=int, default=None, help="Number of atoms K")
@click.option("--atom-shape", default=None, help="w1,w2,...")
@click.option("--alpha", default=None, help="Per-mode L1 weights a1,a2,...")
@click.option("--beta", default=None, help="Per-mode ridge weights b1,b2,...")
@click.option("--loops", type=int, default=None, help="Maximal number of outer loops")
@click.option("--tol", "outer_tol", type=float, default=None,
              help="Relative objective change to stop")
@click.option("--z-iter", "z_max_iter", type=int, default=None,
              help="Activation solver iterations")
@click.option("--d-iter", "d_max_iter", type=int, default=None,
              help="Dictionary solver iterations")
@click.option("--seed", type=int, default=None)
@click.option("--baseline", is_flag=True, default=None,
              help="Fit dense activations instead")
@click.option("--baseline-alpha", type=float, default=None,
              help="L1 weight of the baseline")
@click.option("--init", type=click.Choice(["patches", "noise"]), default=None,
              help="Dictionary initialization")
@click.option("--act-init", type=click.Choice(ACTIVATION_INITS), default=None,
              help="Activation initialization")
@click.option("--balance", type=click.Choice(BALANCE_RULES), default=None,
              help="Rescaling of rank-one terms after each Z-block")
@click.option("--starts", type=int, default=None,
              help="Activation starts; the lowest final objective is kept")
@click.option("--init-dict", type=ExistingPath, default=None,
              help="Start from the atoms.npy in this directory")
@click.option("--freeze-dict", is_flag=True, default=None,
              help="Keep the initial dictionary fixed")
@click.option("--rank-sweep", default=None, help="LO..HI: one fit per rank")
@click.option("--alpha-grid", default=None, help="s1,s2,...: one fit per alpha scale")
def fit(input_path: Path, out: Optional[Path], config_path: Optional[Path], **flags):
    """Fit a model to INPUT (a .npy tensor or a synth directory)."""
    with _command("fit"):
        flags["atom_shape"] = parse_list(flags["atom_shape"], int)
        flags["alpha"] = parse_list(flags["alpha"])
        flags["beta"] = parse_list(flags["beta"])
        flags["alpha_grid"] = parse_list(flags["alpha_grid"])
        rc = RunConfig.from_file(config_path).with_overrides(
            input=input_path, out=out, **flags
        )
        if rc.out is None:
            raise click.UsageError("--out is required")
        y, rc = _load_signal(rc)
        cfg = rc.to_kcsc_config()
        dictionary = read_dictionary(rc.init_dict) if rc.init_dict is not None else None
        rc.out.mkdir(parents=True, exist_ok=True)

        if rc.rank_sweep:
            ranks = parse_rank_range(rc.rank_sweep)
            frame, results = rank_sweep(y, cfg, ranks, dictionary)
            frame.to_csv(rc.out / "rank_sweep.csv", index=False)
            for rank, result in results.items():
                _write_fit(rc.out / f"rank_{rank}", y, replace(cfg, rank=rank), result)
        elif rc.alpha_grid:
            frame = alpha_grid(y, cfg, rc.alpha_grid, dictionary, baseline=cfg.baseline)
            frame.to_csv(rc.out / "alpha_grid.csv", index=False)
            click.echo(f"alpha grid with {len(frame)} fits written to {rc.out}")
        else:
            _write_fit(rc.out, y, cfg, fit_model(y, cfg, dictionary))


@main.command()
@click.option("--model", "model_dir", type=ExistingDir, required=True,
              help="Fit output or synth directory")
@click.option("--input", "input_path", type=ExistingPath, required=True,
              help="Signal to compare against")
@click.option("--out", type=PathArg, required=True, help="Output directory")
def reconstruct(model_dir: Path, input_path: Path, out: Path):
    """Write y_hat.npy and residual.json for a stored model."""
    with _command("reconstruct"):
        dictionary, acts = read_model(model_dir)
        if input_path.is_dir():
            input_path = input_path / read_manifest(input_path).signal
        y = read_tensor(input_path)
        y_hat = model_reconstruction(dictionary, acts)
        if y_hat.shape != y.shape:
            raise StructuralError(
                f"model reconstructs shape {y_hat.shape}, signal has {y.shape}"
            )
        write_tensor(out / "y_hat.npy", y_hat)
        report = residual_report(y, y_hat)
        write_json(out / "residual.json", report)
        click.echo(f"l2_distance={report.l2_distance:.6g} "
                   f"relative={report.relative_distance:.6g}")


@main.command()
@click.option("--schema", is_flag=True, help="Print the JSON schema of metrics.json")
@click.option("--model", "model_dir", type=ExistingDir, default=None,
              help="Fit output directory")
@click.option("--input", "input_path", type=ExistingPath, default=None,
              help="Signal the model was fitted to")
def metrics(schema: bool, model_dir: Optional[Path], input_path: Optional[Path]):
    """Print the metrics schema, or recompute metrics of a stored fit."""
    with _command("metrics"):
        if schema:
            click.echo(json.dumps(metrics_schema(), indent=2, sort_keys=True))
            return
        if model_dir is None or input_path is None:
            raise click.UsageError(
                "either --schema or both --model and --input are required"
            )

        info = ModelInfo.model_validate_json((model_dir / "model.json").read_text())
        dictionary, acts = read_model(model_dir)
        if input_path.is_dir():
            input_path = input_path / read_manifest(input_path).signal
        y = read_tensor(input_path)
        summary = info.config
        cfg = KcscConfig(
            n_atoms=summary["n_atoms"],
            rank=summary["rank"],
            atom_shape=tuple(summary["atom_shape"]),
            alpha=tuple(summary["alpha"]),
            beta=tuple(summary["beta"]),
            baseline=info.model == "baseline",
            baseline_alpha=summary.get("baseline_alpha"),
        )
        trace = FitTrace(model=info.model, loops_completed=info.loops,
                         initial_alpha_max=list(info.initial_alpha_max))
        report = compute_metrics(y, FitResult(dictionary, acts, trace), cfg)
        click.echo(report.model_dump_json(indent=2))


if __name__ == "__main__":
    main()
