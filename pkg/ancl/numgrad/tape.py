"""Recording tape and reverse-mode differentiation."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ancl.errors import (
    DomainError,
    NonScalarLossError,
    ShapeMismatchError,
    TapeConsumedError,
    ValidationError,
)
from ancl.numgrad.tensor import Tensor, as_tensor

NORM_EPS = 1e-12


class OpKind(str, Enum):
    """Primitive operations the tape can record."""

    MATMUL = 'matmul'
    ADD = 'add'
    SUB = 'sub'
    MUL = 'mul'
    SCALAR_MUL = 'scalar_mul'
    RELU = 'relu'
    EXP = 'exp'
    LOG = 'log'
    SUM = 'sum'
    MEAN = 'mean'
    L2_NORMALIZE_ROWS = 'l2_normalize_rows'
    CONCAT_ROWS = 'concat_rows'
    TRANSPOSE = 'transpose'


@dataclass(frozen=True)
class Node:
    """One recorded primitive application."""

    kind: OpKind
    inputs: tuple[Tensor, ...]
    output: Tensor
    attrs: dict[str, Any] = field(default_factory=dict)
    saved: Any = None


@dataclass(frozen=True)
class Primitive:
    """Forward evaluation plus vector-Jacobian product of one op kind."""

    arity: Optional[int]
    forward: Callable[..., tuple[np.ndarray, Any]]
    backward: Callable[..., list[Optional[np.ndarray]]]


_PRIMITIVES: dict[OpKind, Primitive] = {}


def _primitive(kind: OpKind, arity: Optional[int]):
    def register(cls):
        _PRIMITIVES[kind] = Primitive(arity, cls.forward, cls.backward)
        return cls
    return register


def _require_2d(kind: OpKind, array: np.ndarray):
    if array.ndim != 2:
        raise ShapeMismatchError(f"{kind.value} needs a 2-D operand, got shape {array.shape}")


def _row_broadcast(kind: OpKind, a: np.ndarray, b: np.ndarray) -> bool:
    """Checks add/sub shapes; True when b is a bias row broadcast over a's rows."""
    if a.shape == b.shape:
        return False
    if a.ndim == 2 and b.ndim == 1 and b.shape[0] == a.shape[1]:
        return True
    raise ShapeMismatchError(f"{kind.value}: shapes {a.shape} and {b.shape} are incompatible")


@_primitive(OpKind.MATMUL, 2)
class _MatMul:
    @staticmethod
    def forward(arrays, attrs):
        a, b = arrays
        _require_2d(OpKind.MATMUL, a)
        _require_2d(OpKind.MATMUL, b)
        if a.shape[1] != b.shape[0]:
            raise ShapeMismatchError(f"matmul: shapes {a.shape} and {b.shape} are incompatible")
        return a @ b, None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        a, b = arrays
        return [g @ b.T if needs[0] else None, a.T @ g if needs[1] else None]


@_primitive(OpKind.ADD, 2)
class _Add:
    @staticmethod
    def forward(arrays, attrs):
        a, b = arrays
        broadcast = _row_broadcast(OpKind.ADD, a, b)
        return a + b, broadcast

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [g if needs[0] else None, (g.sum(axis=0) if saved else g) if needs[1] else None]


@_primitive(OpKind.SUB, 2)
class _Sub:
    @staticmethod
    def forward(arrays, attrs):
        a, b = arrays
        broadcast = _row_broadcast(OpKind.SUB, a, b)
        return a - b, broadcast

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [g if needs[0] else None, (-(g.sum(axis=0) if saved else g)) if needs[1] else None]


@_primitive(OpKind.MUL, 2)
class _Mul:
    @staticmethod
    def forward(arrays, attrs):
        a, b = arrays
        if a.shape != b.shape:
            raise ShapeMismatchError(f"mul: shapes {a.shape} and {b.shape} differ")
        return a * b, None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        a, b = arrays
        return [g * b if needs[0] else None, g * a if needs[1] else None]


@_primitive(OpKind.SCALAR_MUL, 1)
class _ScalarMul:
    @staticmethod
    def forward(arrays, attrs):
        return attrs['scalar'] * arrays[0], None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [attrs['scalar'] * g]


@_primitive(OpKind.RELU, 1)
class _Relu:
    @staticmethod
    def forward(arrays, attrs):
        a = arrays[0]
        mask = a > 0
        return np.where(mask, a, 0.0), mask

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        # subgradient at exactly 0 is 0
        return [g * saved]


@_primitive(OpKind.EXP, 1)
class _Exp:
    @staticmethod
    def forward(arrays, attrs):
        with np.errstate(over='ignore'):
            return np.exp(arrays[0]), None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [g * out]


@_primitive(OpKind.LOG, 1)
class _Log:
    @staticmethod
    def forward(arrays, attrs):
        a = arrays[0]
        if np.any(a <= 0):
            raise DomainError("log of a non-positive value")
        return np.log(a), None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [g / arrays[0]]


def _check_axis(kind: OpKind, a: np.ndarray, axis: Optional[int]):
    if axis is not None and not -a.ndim <= axis < a.ndim:
        raise ShapeMismatchError(f"{kind.value}: axis {axis} out of range for shape {a.shape}")


@_primitive(OpKind.SUM, 1)
class _Sum:
    @staticmethod
    def forward(arrays, attrs):
        a = arrays[0]
        _check_axis(OpKind.SUM, a, attrs.get('axis'))
        return np.sum(a, axis=attrs.get('axis')), None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        a = arrays[0]
        axis = attrs.get('axis')
        if axis is not None:
            g = np.expand_dims(g, axis)
        return [np.broadcast_to(g, a.shape).copy()]


@_primitive(OpKind.MEAN, 1)
class _Mean:
    @staticmethod
    def forward(arrays, attrs):
        a = arrays[0]
        _check_axis(OpKind.MEAN, a, attrs.get('axis'))
        if a.size == 0:
            raise ShapeMismatchError("mean of an empty tensor")
        return np.mean(a, axis=attrs.get('axis')), None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        a = arrays[0]
        axis = attrs.get('axis')
        count = a.size if axis is None else a.shape[axis]
        if axis is not None:
            g = np.expand_dims(g, axis)
        return [np.broadcast_to(g, a.shape) / count]


@_primitive(OpKind.L2_NORMALIZE_ROWS, 1)
class _L2NormalizeRows:
    @staticmethod
    def forward(arrays, attrs):
        a = arrays[0]
        _require_2d(OpKind.L2_NORMALIZE_ROWS, a)
        norms = np.sqrt(np.sum(a * a, axis=1))
        return a / (norms + NORM_EPS)[:, None], norms

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        a = arrays[0]
        norms = saved
        guarded = norms + NORM_EPS
        projection = np.sum(g * a, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        coef = np.where(norms > 0, projection / (guarded ** 2 * safe), 0.0)
        return [g / guarded[:, None] - coef[:, None] * a]


@_primitive(OpKind.CONCAT_ROWS, None)
class _ConcatRows:
    @staticmethod
    def forward(arrays, attrs):
        if not arrays:
            raise ShapeMismatchError("concat_rows needs at least one operand")
        for a in arrays:
            _require_2d(OpKind.CONCAT_ROWS, a)
        widths = {a.shape[1] for a in arrays}
        if len(widths) != 1:
            raise ShapeMismatchError(f"concat_rows: column counts differ {sorted(widths)}")
        return np.concatenate(arrays, axis=0), [a.shape[0] for a in arrays]

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        bounds = np.cumsum(saved)[:-1]
        return [part if need else None for part, need in zip(np.split(g, bounds, axis=0), needs)]


@_primitive(OpKind.TRANSPOSE, 1)
class _Transpose:
    @staticmethod
    def forward(arrays, attrs):
        _require_2d(OpKind.TRANSPOSE, arrays[0])
        return arrays[0].T, None

    @staticmethod
    def backward(g, arrays, out, saved, attrs, needs):
        return [g.T]


class Tape:
    """Records primitive applications for one reverse-mode pass.

    A tape is single-use: ``backward`` consumes it, and any later
    ``record`` or ``backward`` raises TapeConsumedError. Confine a tape
    to one thread.
    """

    def __init__(self):
        self._nodes: list[Node] = []
        self._leaves: dict[int, Tensor] = {}
        self._tracked: set[int] = set()
        self._consumed = False

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes)

    @property
    def leaves(self) -> tuple[Tensor, ...]:
        return tuple(self._leaves.values())

    @property
    def consumed(self) -> bool:
        return self._consumed

    def _check_open(self):
        if self._consumed:
            raise TapeConsumedError("tape was already consumed by backward()")

    def watch(self, value: Any) -> Tensor:
        """Registers a leaf parameter whose gradient backward() reports.

        Args:
            value: Array-like or Tensor

        Returns:
            The leaf Tensor
        """
        self._check_open()
        tensor = as_tensor(value)
        self._leaves[tensor.id] = tensor
        self._tracked.add(tensor.id)
        return tensor

    def record(self, kind: OpKind | str, *inputs: Any, **attrs: Any) -> Tensor:
        """Evaluates a primitive eagerly and appends it to the tape.

        Args:
            kind: Primitive kind
            *inputs: Operand tensors (arrays are wrapped as constants)
            **attrs: Primitive attributes (``scalar`` for scalar_mul,
                ``axis`` for sum/mean)

        Returns:
            Output tensor
        """
        self._check_open()
        kind = OpKind(kind)
        primitive = _PRIMITIVES[kind]
        tensors = tuple(as_tensor(x) for x in inputs)
        if primitive.arity is not None and len(tensors) != primitive.arity:
            raise ShapeMismatchError(
                f"{kind.value} takes {primitive.arity} operand(s), got {len(tensors)}"
            )
        value, saved = primitive.forward([t.data for t in tensors], attrs)
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{kind.value} produced non-finite values")
        output = Tensor(value)
        self._nodes.append(Node(kind, tensors, output, dict(attrs), saved))
        if any(t.id in self._tracked for t in tensors):
            self._tracked.add(output.id)
        return output

    def matmul(self, a, b) -> Tensor:
        return self.record(OpKind.MATMUL, a, b)

    def add(self, a, b) -> Tensor:
        return self.record(OpKind.ADD, a, b)

    def sub(self, a, b) -> Tensor:
        return self.record(OpKind.SUB, a, b)

    def mul(self, a, b) -> Tensor:
        return self.record(OpKind.MUL, a, b)

    def scalar_mul(self, a, scalar: float) -> Tensor:
        return self.record(OpKind.SCALAR_MUL, a, scalar=float(scalar))

    def relu(self, a) -> Tensor:
        return self.record(OpKind.RELU, a)

    def exp(self, a) -> Tensor:
        return self.record(OpKind.EXP, a)

    def log(self, a) -> Tensor:
        return self.record(OpKind.LOG, a)

    def sum(self, a, axis: Optional[int] = None) -> Tensor:
        return self.record(OpKind.SUM, a, axis=axis)

    def mean(self, a, axis: Optional[int] = None) -> Tensor:
        return self.record(OpKind.MEAN, a, axis=axis)

    def l2_normalize_rows(self, a) -> Tensor:
        return self.record(OpKind.L2_NORMALIZE_ROWS, a)

    def concat_rows(self, *parts) -> Tensor:
        return self.record(OpKind.CONCAT_ROWS, *parts)

    def transpose(self, a) -> Tensor:
        return self.record(OpKind.TRANSPOSE, a)

    def abs(self, a) -> Tensor:
        """|a| composed as relu(a) + relu(-a)."""
        return self.add(self.relu(a), self.relu(self.scalar_mul(a, -1.0)))

    def backward(self, loss: Tensor) -> dict[Tensor, np.ndarray]:
        """Back-propagates from a scalar loss and consumes the tape.

        Args:
            loss: One-element tensor recorded on this tape (or a leaf)

        Returns:
            Adjoint array for every watched leaf; zeros for leaves the
            loss does not depend on
        """
        self._check_open()
        if loss.size != 1:
            raise NonScalarLossError(f"loss must have one element, got shape {loss.shape}")
        produced = {node.output.id for node in self._nodes}
        if loss.id not in produced and loss.id not in self._leaves:
            raise ValidationError("loss was not recorded on this tape")
        self._consumed = True

        adjoints: dict[int, np.ndarray] = {loss.id: np.ones(loss.shape)}
        for node in reversed(self._nodes):
            g = adjoints.get(node.output.id)
            if g is None:
                continue
            needs = [t.id in self._tracked for t in node.inputs]
            if not any(needs):
                continue
            grads = _PRIMITIVES[node.kind].backward(
                g, [t.data for t in node.inputs], node.output.data, node.saved, node.attrs, needs
            )
            for tensor, grad, need in zip(node.inputs, grads, needs):
                if not need or grad is None:
                    continue
                if tensor.id in adjoints:
                    adjoints[tensor.id] = adjoints[tensor.id] + grad
                else:
                    adjoints[tensor.id] = np.array(grad, dtype=np.float64)

        return {
            leaf: adjoints.get(leaf_id, np.zeros(leaf.shape)).reshape(leaf.shape)
            for leaf_id, leaf in self._leaves.items()
        }


def record(tape: Tape, kind: OpKind | str, inputs: Sequence[Any], **attrs: Any) -> Tensor:
    """Functional form of ``Tape.record``."""
    return tape.record(kind, *inputs, **attrs)


def backward(tape: Tape, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Functional form of ``Tape.backward``."""
    return tape.backward(loss)
