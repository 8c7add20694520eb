"""Command-line surface."""

from ancl.cli.commands import (
    embed_command,
    feature_study_command,
    gradcheck_command,
    probe_command,
    pretrain_command,
    synth_command,
)

__all__ = [
    'synth_command',
    'pretrain_command',
    'embed_command',
    'probe_command',
    'gradcheck_command',
    'feature_study_command',
]
