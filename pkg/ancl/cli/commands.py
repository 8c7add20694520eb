"""CLI commands for ANCL.

Each command resolves the run config, prepares its output directory (run
log plus the resolved ``config.toml``) and delegates to the library.
Errors propagate; ``main.run`` turns them into exit codes.
"""

from pathlib import Path
from typing import Optional

import click

from ancl.anatomy import MeasureSet
from ancl.cohort import Cohort, generate, load_cohort, save_cohort, save_embeddings
from ancl.config import RunConfig, parse_config
from ancl.errors import GradcheckFailure, MissingRequiredError
from ancl.model import (
    encode,
    initial_checkpoint,
    load_checkpoint,
    pretrain,
    run_gradcheck_suite,
    save_checkpoint,
    save_loss_trace,
)
from ancl.probe import cross_validate, feature_study, feature_study_frame, write_results
from ancl.utils.fileio import atomic_write_text
from ancl.utils.logger import attach_run_log, setup_logger

logger = setup_logger(__name__)

CONFIG_FILE = 'config.toml'
RUN_LOG = 'run.log'
CHECKPOINT_FILE = 'checkpoint.ancl'
LOSS_TRACE_FILE = 'loss_trace.csv'
EMBEDDINGS_FILE = 'embeddings.csv'
PROBE_FOLDS_FILE = 'probe_folds.csv'
PROBE_SUMMARY_FILE = 'probe_summary.csv'
FEATURE_STUDY_FILE = 'feature_study.csv'
FEATURE_FOLDS_FILE = 'feature_study_folds.csv'


def _require(name: str, value):
    if value is None:
        raise MissingRequiredError(f'--{name}', "option is required for this command")
    return value


def _load_config(config_path: Optional[str], seed: Optional[int]) -> RunConfig:
    config = parse_config(config_path)
    if seed is not None:
        config = config.with_overrides(seed=seed)
    return config


def _prepare_output(out: str, config: RunConfig) -> Path:
    """Creates the output directory, routes logs into it and echoes the config."""
    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    attach_run_log(directory / RUN_LOG, config.log_level)
    config.dump(directory / CONFIG_FILE)
    return directory


def _restrict_measures(cohort: Cohort, config: RunConfig) -> Cohort:
    if cohort.roi is None:
        return cohort
    measures = MeasureSet.parse(config.measures)
    if measures == cohort.roi.measures:
        return cohort
    return Cohort(cohort.ids, cohort.x, cohort.ages, cohort.sex, cohort.labels, cohort.roi.select(measures))


def synth_command(config_path: Optional[str] = None, out: Optional[str] = None, seed: Optional[int] = None):
    """Generates a synthetic cohort directory.

    Args:
        config_path: Run config file
        out: Output cohort directory
        seed: Overrides the config seed
    """
    config = _load_config(config_path, seed)
    directory = _prepare_output(_require('out', out), config)
    cohort = generate(config.synthetic)
    save_cohort(cohort, directory)
    click.echo(f"wrote {len(cohort)} subjects to {directory}")


def pretrain_command(
    config_path: Optional[str] = None,
    cohort_dir: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    init_only: bool = False,
):
    """Pretrains an encoder; writes the checkpoint and loss trace.

    Args:
        config_path: Run config file
        cohort_dir: Cohort directory
        out: Output run directory
        seed: Overrides the config seed
        init_only: Write the untrained epoch-0 checkpoint instead
    """
    config = _load_config(config_path, seed)
    variant = config.loss.variant
    cohort_dir = Path(_require('cohort', cohort_dir))
    cohort = _restrict_measures(load_cohort(cohort_dir, require_roi=variant.needs_roi), config)
    directory = _prepare_output(_require('out', out), config)

    if init_only:
        checkpoint = initial_checkpoint(config.encoder, config.train, cohort)
        save_checkpoint(checkpoint, directory / CHECKPOINT_FILE)
        click.echo(f"wrote epoch-0 checkpoint to {directory / CHECKPOINT_FILE}")
        return

    result = pretrain(cohort, config.encoder, config.train)
    save_checkpoint(result.checkpoint, directory / CHECKPOINT_FILE)
    save_loss_trace(result.loss_trace, directory / LOSS_TRACE_FILE)
    click.echo(
        f"{variant.value}: {len(result.loss_trace)} epochs, final mean loss {result.loss_trace[-1]:.6f}"
    )


def embed_command(
    config_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
    cohort_dir: Optional[str] = None,
    out: Optional[str] = None,
):
    """Extracts frozen-encoder representations for every subject."""
    config = _load_config(config_path, None)
    checkpoint = load_checkpoint(Path(_require('checkpoint', checkpoint_path)))
    cohort = load_cohort(Path(_require('cohort', cohort_dir)))
    directory = _prepare_output(_require('out', out), config)
    h = encode(checkpoint.params, cohort.x)
    save_embeddings(cohort.ids, h, directory / EMBEDDINGS_FILE)
    click.echo(f"wrote {h.shape[0]} x {h.shape[1]} representations to {directory / EMBEDDINGS_FILE}")


def probe_command(
    config_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
    cohort_dir: Optional[str] = None,
    task: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
):
    """Cross-validated linear probes; every task when ``task`` is None."""
    config = _load_config(config_path, seed)
    checkpoint = load_checkpoint(Path(_require('checkpoint', checkpoint_path)))
    cohort = load_cohort(Path(_require('cohort', cohort_dir)))
    tasks = [task] if task is not None else cohort.tasks
    for name in tasks:
        cohort.target(name)
    directory = _prepare_output(_require('out', out), config)

    results = [cross_validate(cohort, checkpoint, name, config.probe) for name in tasks]
    write_results(results, directory / PROBE_FOLDS_FILE, directory / PROBE_SUMMARY_FILE)
    click.echo("task,metric,mean,std")
    for result in results:
        click.echo(f"{result.task},{result.metric},{result.mean:.6f},{result.std:.6f}")


def gradcheck_command(config_path: Optional[str] = None, out: Optional[str] = None, seed: Optional[int] = None):
    """Runs the finite-difference suite over every loss variant."""
    config = _load_config(config_path, seed)
    if out is not None:
        _prepare_output(out, config)
    results = run_gradcheck_suite(seed=config.seed, temperature=config.temperature, sigma=config.sigma)
    lines = [f"{r.variant.value:<16} {r.max_error:.3e} {'ok' if r.passed else 'FAIL'}" for r in results]
    for line in lines:
        click.echo(line)
    if out is not None:
        atomic_write_text(Path(out) / 'gradcheck.txt', '\n'.join(lines) + '\n')
    failed = [r.variant.value for r in results if not r.passed]
    if failed:
        raise GradcheckFailure(f"gradient check failed for {', '.join(failed)}")


def feature_study_command(
    config_path: Optional[str] = None,
    cohort_dir: Optional[str] = None,
    out: Optional[str] = None,
    seed: Optional[int] = None,
):
    """Per-measure ridge regression of age from ROI measures."""
    config = _load_config(config_path, seed)
    cohort = load_cohort(Path(_require('cohort', cohort_dir)), require_roi=True)
    directory = _prepare_output(_require('out', out), config)
    results = feature_study(cohort.roi, cohort.ages, k=config.folds, penalty=config.ridge_penalty, seed=config.seed)
    frame = feature_study_frame(results)
    atomic_write_text(directory / FEATURE_STUDY_FILE, frame.to_csv(index=False, float_format='%.17g', lineterminator='\n'))
    write_results(results, directory / FEATURE_FOLDS_FILE, directory / 'feature_study_summary.csv')
    click.echo(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
