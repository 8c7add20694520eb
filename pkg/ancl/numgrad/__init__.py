"""Dense float64 tensors with reverse-mode differentiation."""

from ancl.numgrad.tensor import Tensor, as_tensor
from ancl.numgrad.tape import NORM_EPS, Node, OpKind, Tape, backward, record
from ancl.numgrad.gradcheck import finite_diff_check, tape_gradients

__all__ = [
    'Tensor',
    'as_tensor',
    'Tape',
    'Node',
    'OpKind',
    'NORM_EPS',
    'record',
    'backward',
    'finite_diff_check',
    'tape_gradients',
]
