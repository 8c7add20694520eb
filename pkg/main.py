"""ANCL CLI entry point."""

import sys
from typing import Optional, Sequence

import click

from ancl.cli.commands import (
    embed_command,
    feature_study_command,
    gradcheck_command,
    probe_command,
    pretrain_command,
    synth_command,
)
from ancl.errors import RuntimeFailure, UnknownCommandError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

config_option = click.option('--config', 'config_path', default=None, help='Run config file (default: $ANCL_CONFIG)')
out_option = click.option('--out', default=None, help='Output directory')
cohort_option = click.option('--cohort', 'cohort_dir', default=None, help='Cohort directory')
checkpoint_option = click.option('--checkpoint', 'checkpoint_path', default=None, help='Checkpoint file')
seed_option = click.option('--seed', type=int, default=None, help='Override the config seed')


class AnclGroup(click.Group):
    """Command group that reports unknown commands as UnknownCommandError."""

    def resolve_command(self, ctx, args):
        name = click.utils.make_str(args[0])
        if not name.startswith('-') and not ctx.resilient_parsing and self.get_command(ctx, name) is None:
            raise UnknownCommandError(f"no such command {name!r}; choose from {', '.join(self.list_commands(ctx))}")
        return super().resolve_command(ctx, args)


@click.group(cls=AnclGroup)
def cli():
    """ANCL - anatomy-weighted contrastive pretraining and linear probing."""
    pass


@cli.command()
@config_option
@out_option
@seed_option
def synth(config_path, out, seed):
    """Generate a synthetic cohort."""
    synth_command(config_path=config_path, out=out, seed=seed)


@cli.command()
@config_option
@cohort_option
@out_option
@seed_option
@click.option('--init-only', is_flag=True, help='Write the untrained epoch-0 checkpoint')
def pretrain(config_path, cohort_dir, out, seed, init_only):
    """Pretrain an encoder with the configured loss variant."""
    pretrain_command(config_path=config_path, cohort_dir=cohort_dir, out=out, seed=seed, init_only=init_only)


@cli.command()
@config_option
@checkpoint_option
@cohort_option
@out_option
def embed(config_path, checkpoint_path, cohort_dir, out):
    """Write frozen-encoder representations for a cohort."""
    embed_command(config_path=config_path, checkpoint_path=checkpoint_path, cohort_dir=cohort_dir, out=out)


@cli.command()
@config_option
@checkpoint_option
@cohort_option
@click.option('--task', default=None, help='age, sex or a label name (default: every task)')
@out_option
@seed_option
def probe(config_path, checkpoint_path, cohort_dir, task, out, seed):
    """Cross-validated linear probes on frozen representations."""
    probe_command(
        config_path=config_path,
        checkpoint_path=checkpoint_path,
        cohort_dir=cohort_dir,
        task=task,
        out=out,
        seed=seed,
    )


@cli.command()
@config_option
@out_option
@seed_option
def gradcheck(config_path, out, seed):
    """Finite-difference gradient check of every loss variant."""
    gradcheck_command(config_path=config_path, out=out, seed=seed)


@cli.command('feature-study')
@config_option
@cohort_option
@out_option
@seed_option
def feature_study(config_path, cohort_dir, out, seed):
    """Predict age from each ROI measure separately."""
    feature_study_command(config_path=config_path, cohort_dir=cohort_dir, out=out, seed=seed)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Runs the CLI and maps failures to exit codes.

    Returns:
        0 on success, 1 on validation errors, 2 on runtime errors
    """
    args = list(argv) if argv is not None else sys.argv[1:]
    try:
        result = cli.main(args=args, prog_name='ancl', standalone_mode=False)
    except ValidationError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_VALIDATION
    except RuntimeFailure as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    except click.ClickException as e:
        e.show()
        return EXIT_VALIDATION
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_VALIDATION
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_RUNTIME
    return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(run())
