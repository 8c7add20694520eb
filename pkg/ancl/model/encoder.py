"""MLP encoder, projection head and optional regression head."""

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ancl.config import EncoderConfig
from ancl.errors import ShapeMismatchError, ValidationError
from ancl.numgrad import Tape, Tensor


@dataclass(frozen=True)
class ForwardPass:
    """Outputs of one forward evaluation.

    h is the representation read by downstream probes; z is the projected
    embedding on the unit sphere (None when the head was skipped).
    """

    h: Tensor
    z: Optional[Tensor]


def layer_shapes(config: EncoderConfig, regressor_outputs: int = 0) -> dict[str, tuple[int, ...]]:
    """Parameter names and shapes in their fixed order.

    Encoder layers are ``encoder.{i}``, the two-layer head is ``head.0``
    and ``head.1``, and supervised baselines add ``regressor``.
    """
    widths = [config.input_dim, *config.hidden_widths, config.representation_dim]
    shapes: dict[str, tuple[int, ...]] = {}
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        shapes[f'encoder.{i}.weight'] = (fan_in, fan_out)
        shapes[f'encoder.{i}.bias'] = (fan_out,)
    d_enc = config.representation_dim
    shapes['head.0.weight'] = (d_enc, d_enc)
    shapes['head.0.bias'] = (d_enc,)
    shapes['head.1.weight'] = (d_enc, config.projection_dim)
    shapes['head.1.bias'] = (config.projection_dim,)
    if regressor_outputs:
        shapes['regressor.weight'] = (d_enc, regressor_outputs)
        shapes['regressor.bias'] = (regressor_outputs,)
    return shapes


def init_params(
    config: EncoderConfig,
    regressor_outputs: int = 0,
    regressor_bias: Optional[np.ndarray] = None,
) -> dict[str, np.ndarray]:
    """Deterministic Glorot-uniform initialization.

    Weights are drawn from U(-sqrt(6 / (fan_in + fan_out)), +...) in
    parameter order from ``default_rng(config.seed)``; biases are zero
    except the regressor bias, which starts at ``regressor_bias``.

    Args:
        config: Encoder configuration
        regressor_outputs: Width of the regression head, 0 for none
        regressor_bias: Initial regressor bias (training-target mean)

    Returns:
        Ordered mapping of parameter name to array
    """
    rng = np.random.default_rng(config.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in layer_shapes(config, regressor_outputs).items():
        if name.endswith('.weight'):
            limit = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-limit, limit, size=shape)
        else:
            params[name] = np.zeros(shape)

    if regressor_outputs and regressor_bias is not None:
        bias = np.asarray(regressor_bias, dtype=np.float64).reshape(-1)
        if bias.shape != (regressor_outputs,):
            raise ValidationError(f"regressor bias must have {regressor_outputs} entries, got {bias.shape}")
        params['regressor.bias'] = bias.copy()
    return params


def encoder_depth(params: Mapping[str, object]) -> int:
    depth = 0
    while f'encoder.{depth}.weight' in params:
        depth += 1
    return depth


def forward(tape: Tape, params: Mapping[str, Tensor | np.ndarray], x, project: bool = True) -> ForwardPass:
    """Runs the encoder, and the projection head when ``project`` is set.

    Args:
        tape: Tape recording the computation
        params: Parameters by name (watched leaves when differentiating)
        x: (batch, input_dim) inputs
        project: Whether to compute z

    Returns:
        ForwardPass with h and z
    """
    depth = encoder_depth(params)
    if depth == 0:
        raise ValidationError("parameters contain no encoder layers")
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    first = params['encoder.0.weight']
    input_dim = (first.shape if isinstance(first, Tensor) else np.shape(first))[0]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ShapeMismatchError(f"encoder expects (batch, {input_dim}) inputs, got {x.shape}")

    h = Tensor(x)
    for i in range(depth):
        h = tape.add(tape.matmul(h, params[f'encoder.{i}.weight']), params[f'encoder.{i}.bias'])
        if i < depth - 1:
            h = tape.relu(h)

    if not project:
        return ForwardPass(h=h, z=None)

    hidden = tape.relu(tape.add(tape.matmul(h, params['head.0.weight']), params['head.0.bias']))
    out = tape.add(tape.matmul(hidden, params['head.1.weight']), params['head.1.bias'])
    return ForwardPass(h=h, z=tape.l2_normalize_rows(out))


def encoder_params(params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    """The frozen-encoder view: only ``encoder.*`` parameters."""
    return {name: value for name, value in params.items() if name.startswith('encoder.')}


def encode(params: Mapping[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Representations h for inference; reads encoder parameters only."""
    return forward(Tape(), encoder_params(params), x, project=False).h.numpy()


def project(params: Mapping[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Embeddings z for inference."""
    return forward(Tape(), params, x).z.numpy()
