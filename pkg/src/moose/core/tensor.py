"""Dense float64 tensors with a dynamic reverse-mode tape.

Operations record themselves on the active :class:`Tape` whenever at least one
input requires a gradient. Outside a ``with Tape():`` block nothing is recorded,
so inference is free of autograd bookkeeping.
"""

import contextvars
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[Any]]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_ACTIVE_TAPE: "contextvars.ContextVar[Optional[Tape]]" = contextvars.ContextVar(
    "moose_active_tape", default=None
)
_ACTIVE_COUNTER: "contextvars.ContextVar[Optional[MacCounter]]" = contextvars.ContextVar(
    "moose_mac_counter", default=None
)

LAYER_NORM_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


class ShapeError(ValueError):
    """Exception raised when tensor shapes are incompatible."""

    pass


class MaskError(ValueError):
    """Exception raised when an attention mask leaves a row with no allowed entry."""

    pass


class GradientError(RuntimeError):
    """Exception raised for invalid backward passes."""

    pass


class Tensor:
    """N-dimensional float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(
        self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.array(data, dtype=np.float64, copy=True, order="C")
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.name = name

    @classmethod
    def _wrap(cls, data: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an array produced by an operation without copying it."""
        out = cls.__new__(cls)
        out.data = np.ascontiguousarray(data, dtype=np.float64)
        out.grad = None
        out.requires_grad = requires_grad
        out.name = None
        return out

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    # Operator sugar, all routed through the recorded functions below.
    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(as_tensor(other), self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "Tensor":
        return mul(self, 1.0 / float(other))

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        return getitem(self, index)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        return transpose(self, axes or None)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis=axis, keepdims=keepdims)


@dataclass
class TapeNode:
    """One recorded operation: output, inputs and local backward rule."""

    output: Tensor
    inputs: Tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Ordered record of differentiable operations.

    Use as a context manager; every op executed inside the block that touches a
    ``requires_grad`` tensor appends a node. ``backward`` may run once per
    recording; call :meth:`reset` to reuse the tape.
    """

    def __init__(self) -> None:
        self.nodes: List[TapeNode] = []
        self._consumed = False
        self._token: Optional[contextvars.Token] = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], backward: BackwardFn) -> None:
        if self._consumed:
            raise GradientError("tape already consumed by backward(); call reset() first")
        self.nodes.append(TapeNode(output=output, inputs=inputs, backward=backward))

    def reset(self) -> None:
        self.nodes = []
        self._consumed = False

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf that requires it."""
        if loss.size != 1:
            raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
        if self._consumed:
            raise GradientError("backward already ran on this tape; call reset() first")
        self._consumed = True

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        produced = {id(node.output) for node in self.nodes}
        leaves: Dict[int, Tensor] = {}
        if loss.requires_grad and id(loss) not in produced:
            leaves[id(loss)] = loss

        for node in reversed(self.nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            local = node.backward(g)
            for inp, gi in zip(node.inputs, local):
                if gi is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if id(inp) not in produced:
                    leaves[key] = inp
                grads[key] = grads[key] + gi if key in grads else gi

        for key, leaf in leaves.items():
            g = grads.get(key)
            if g is None:
                continue
            g = np.asarray(g, dtype=np.float64).reshape(leaf.shape)
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate gradients of every leaf recorded on ``tape``."""
    tape.backward(loss)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


class MacCounter:
    """Counts multiply-accumulates performed by :func:`matmul` while active."""

    def __init__(self) -> None:
        self.macs = 0
        self._token: Optional[contextvars.Token] = None

    def __enter__(self) -> "MacCounter":
        self._token = _ACTIVE_COUNTER.set(self)
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        if self._token is not None:
            _ACTIVE_COUNTER.reset(self._token)
            self._token = None


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, inputs: Tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    tape = _ACTIVE_TAPE.get()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad=needs_grad)
    if needs_grad and tape is not None:
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from e


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return _result(a.data + b.data, (a, b), backward_fn)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, sa), -_unbroadcast(g, sb)

    return _result(a.data - b.data, (a, b), backward_fn)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    ad, bd = a.data, b.data

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _result(ad * bd, (a, b), backward_fn)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, leading axes broadcast.

    ``a`` is ``[..., m, k]`` and ``b`` is ``[..., k, n]``.
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as e:
        raise ShapeError(f"matmul: incompatible batch shapes {a.shape} and {b.shape}") from e

    counter = _ACTIVE_COUNTER.get()
    if counter is not None:
        m, k = a.shape[-2:]
        n = b.shape[-1]
        counter.macs += int(np.prod(batch, dtype=np.int64)) * m * k * n

    ad, bd = a.data, b.data

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ga = g @ np.swapaxes(bd, -1, -2)
        gb = np.swapaxes(ad, -1, -2) @ g
        return _unbroadcast(ga, ad.shape), _unbroadcast(gb, bd.shape)

    return _result(ad @ bd, (a, b), backward_fn)


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    perm = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    if sorted(perm) != list(range(a.ndim)):
        raise ShapeError(f"transpose: axes {perm} invalid for shape {a.shape}")
    inverse = tuple(np.argsort(perm))

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (np.transpose(g, inverse),)

    return _result(np.transpose(a.data, perm), (a,), backward_fn)


def swap_last(a: Tensor) -> Tensor:
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    try:
        out = a.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {shape}") from e
    original = a.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (g.reshape(original),)

    return _result(out, (a,), backward_fn)


def getitem(a: Tensor, index: Any) -> Tensor:
    """Basic (int/slice) indexing."""
    out = a.data[index]
    original = a.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        full = np.zeros(original, dtype=np.float64)
        full[index] += g
        return (full,)

    return _result(np.array(out, dtype=np.float64), (a,), backward_fn)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: need at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"concat: incompatible shapes {shapes} along axis {axis}") from e
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(g: np.ndarray) -> List[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return _result(out, tuple(tensors), backward_fn)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError as e:
        raise ShapeError(f"broadcast_to: cannot broadcast {a.shape} to {shape}") from e
    original = a.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        return (_unbroadcast(g, original),)

    return _result(np.array(out), (a,), backward_fn)


def tensor_sum(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    original = a.shape

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, original).copy(),)

    return _result(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward_fn)


def tensor_mean(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    return mul(tensor_sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def gelu(x: Tensor) -> Tensor:
    """Tanh-approximated GELU; smooth everywhere, so finite differences agree."""
    xd = x.data
    inner = _GELU_C * (xd + 0.044715 * xd**3)
    t = np.tanh(inner)
    out = 0.5 * xd * (1.0 + t)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * xd**2)
        local = 0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t**2) * d_inner
        return (g * local,)

    return _result(out, (x,), backward_fn)


def _mask_array(mask: Any) -> Optional[np.ndarray]:
    if mask is None:
        return None
    allowed = getattr(mask, "allowed", mask)
    return np.asarray(allowed, dtype=bool)


def softmax_lastdim(x: Tensor, mask: Any = None) -> Tensor:
    """Softmax over the last axis; masked-out entries are exactly zero.

    ``mask`` is a boolean array (or an object with an ``allowed`` array)
    broadcasting over the last two axes of ``x``. ``True`` means allowed.
    """
    allowed = _mask_array(mask)
    xd = x.data
    if allowed is not None:
        try:
            allowed = np.broadcast_to(allowed, xd.shape)
        except ValueError as e:
            raise ShapeError(
                f"softmax_lastdim: mask shape {allowed.shape} does not fit {xd.shape}"
            ) from e
        if not np.all(allowed.any(axis=-1)):
            raise MaskError("softmax_lastdim: a row has no allowed entry")
        logits = np.where(allowed, xd, -np.inf)
    else:
        logits = xd

    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    if allowed is not None:
        e = np.where(allowed, e, 0.0)
    probs = e / np.sum(e, axis=-1, keepdims=True)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        dot = np.sum(g * probs, axis=-1, keepdims=True)
        return (probs * (g - dot),)

    return _result(probs, (x,), backward_fn)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize the last axis to zero mean and unit variance, then scale and shift."""
    dim = x.shape[-1]
    if dim < 2:
        raise ShapeError(f"layer_norm: last dimension must be >= 2, got shape {x.shape}")
    if gamma.shape != (dim,) or beta.shape != (dim,):
        raise ShapeError(
            f"layer_norm: gamma {gamma.shape} / beta {beta.shape} do not match input {x.shape}"
        )

    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    centered = xd - mu
    var = np.mean(centered**2, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    gd = gamma.data
    out = xhat * gd + beta.data

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lead = tuple(range(g.ndim - 1))
        d_gamma = np.sum(g * xhat, axis=lead)
        d_beta = np.sum(g, axis=lead)
        dxhat = g * gd
        dx = (
            inv_std
            / dim
            * (
                dim * dxhat
                - dxhat.sum(axis=-1, keepdims=True)
                - xhat * np.sum(dxhat * xhat, axis=-1, keepdims=True)
            )
        )
        return dx, d_gamma, d_beta

    return _result(out, (x, gamma, beta), backward_fn)


def log_softmax_nll(logits: Tensor, label: int) -> Tensor:
    """Negative log-likelihood of ``label`` under softmax(logits), for a 1-D logit vector."""
    if logits.ndim != 1:
        raise ShapeError(f"log_softmax_nll: expected 1-D logits, got shape {logits.shape}")
    ld = logits.data
    m = np.max(ld)
    lse = m + np.log(np.sum(np.exp(ld - m)))
    loss = np.array(lse - ld[label])
    probs = np.exp(ld - lse)

    def backward_fn(g: np.ndarray) -> Tuple[np.ndarray]:
        local = probs.copy()
        local[label] -= 1.0
        return (g * local,)

    return _result(loss, (logits,), backward_fn)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Largest entrywise |a - n| / max(|a| + |n|, floor)."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)))


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Dict[str, Tensor],
    step: float = 1e-5,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> Dict[str, float]:
    """Compare autograd against central finite differences for every parameter.

    Args:
        loss_fn: Builds the scalar loss from the current parameter values
        params: Named parameter tensors (modified in place, then restored)
        step: Finite-difference step
        max_entries: Entries sampled per parameter (None checks all of them)
        seed: Seed for entry sampling

    Returns:
        Mapping of parameter name to relative error
    """
    for p in params.values():
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    rng = np.random.default_rng(seed)
    errors: Dict[str, float] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        if max_entries is None or flat.size <= max_entries:
            picks = np.arange(flat.size)
        else:
            picks = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        numeric = np.empty(len(picks))
        for j, i in enumerate(picks):
            original = flat[i]
            flat[i] = original + step
            plus = loss_fn().item()
            flat[i] = original - step
            minus = loss_fn().item()
            flat[i] = original
            numeric[j] = (plus - minus) / (2.0 * step)
        errors[name] = relative_error(analytic[name].reshape(-1)[picks], numeric)
    return errors
