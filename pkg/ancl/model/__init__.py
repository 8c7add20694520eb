"""Encoder, optimizer, pretraining and checkpoints."""

from ancl.model.encoder import (
    ForwardPass,
    encode,
    encoder_params,
    forward,
    init_params,
    layer_shapes,
    project,
)
from ancl.model.optimizer import AdamState, adam_step
from ancl.model.objectives import TrainingBatch, batch_loss, regressor_outputs
from ancl.model.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from ancl.model.pretrain import TrainingResult, initial_checkpoint, pretrain, save_loss_trace
from ancl.model.gradcheck_suite import GRADCHECK_TOLERANCE, GradcheckResult, run_gradcheck_suite

__all__ = [
    'ForwardPass',
    'layer_shapes',
    'init_params',
    'forward',
    'encoder_params',
    'encode',
    'project',
    'AdamState',
    'adam_step',
    'TrainingBatch',
    'batch_loss',
    'regressor_outputs',
    'MAGIC',
    'FORMAT_VERSION',
    'Checkpoint',
    'encode_checkpoint',
    'decode_checkpoint',
    'save_checkpoint',
    'load_checkpoint',
    'TrainingResult',
    'initial_checkpoint',
    'pretrain',
    'save_loss_trace',
    'GRADCHECK_TOLERANCE',
    'GradcheckResult',
    'run_gradcheck_suite',
]
