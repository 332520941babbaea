"""Dense float64 tensors with reverse-mode differentiation.

A forward pass builds a graph of ``Tensor`` nodes; ``backward`` walks it
once in reverse topological order. Each op captures the forward values it
needs at construction time, so later parameter updates never corrupt a
pending backward pass. Only the layers the combination network needs are
provided: length-preserving 1-D convolution, squeeze-and-excite, pooling,
dense layers, the usual activations, softmax, and the Adam update.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DisconnectedGraphWarning, ShapeMismatch

# When enabled every op asserts its output is finite.
DEBUG_NAN_CHECK = False


class Tensor:
    __slots__ = ("data", "grad", "parents", "vjps", "name")

    def __init__(
        self,
        data,
        parents: tuple["Tensor", ...] = (),
        vjps: tuple[Callable[[np.ndarray], np.ndarray] | None, ...] = (),
        name: str = "",
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.vjps = vjps
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        label = self.name or type(self).__name__
        return f"{label}(shape={self.data.shape})"


class Parameter(Tensor):
    """Named leaf tensor whose gradient drives optimization."""

    __slots__ = ()

    def __init__(self, name: str, data):
        super().__init__(data, name=name)


def tensor(data) -> Tensor:
    """Wrap a constant leaf."""
    return Tensor(data)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], vjps: tuple) -> Tensor:
    if DEBUG_NAN_CHECK and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite values produced by a tensor op")
    return Tensor(data, parents=parents, vjps=vjps)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


# -- elementwise and structural ops -------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    return _make(a.data + b.data, (a, b),
                 (lambda g: _unbroadcast(g, sa), lambda g: _unbroadcast(g, sb)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    return _make(a.data - b.data, (a, b),
                 (lambda g: _unbroadcast(g, sa), lambda g: _unbroadcast(-g, sb)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    sa, sb = a.shape, b.shape
    return _make(ad * bd, (a, b),
                 (lambda g: _unbroadcast(g * bd, sa), lambda g: _unbroadcast(g * ad, sb)))


def scale(a: Tensor, k: float) -> Tensor:
    return _make(a.data * k, (a,), (lambda g: g * k,))


def square(a: Tensor) -> Tensor:
    ad = a.data
    return _make(ad * ad, (a,), (lambda g: 2.0 * ad * g,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0.0
    return _make(np.where(mask, a.data, 0.0), (a,), (lambda g: g * mask,))


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _make(out, (a,), (lambda g: g * out * (1.0 - out),))


def log(a: Tensor) -> Tensor:
    ad = a.data
    return _make(np.log(ad), (a,), (lambda g: g / ad,))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    ad = a.data
    mask = (ad >= lo) & (ad <= hi)
    return _make(np.clip(ad, lo, hi), (a,), (lambda g: g * mask,))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.shape
    return _make(a.data.reshape(shape), (a,), (lambda g: g.reshape(old),))


def sum_all(a: Tensor) -> Tensor:
    sa = a.shape
    return _make(np.asarray(a.data.sum()), (a,), (lambda g: np.broadcast_to(g, sa).copy(),))


def mean_all(a: Tensor) -> Tensor:
    sa = a.shape
    n = a.data.size
    return _make(np.asarray(a.data.mean()), (a,),
                 (lambda g: np.broadcast_to(g / n, sa).copy(),))


def sum_axis(a: Tensor, axis: int) -> Tensor:
    sa = a.shape
    return _make(a.data.sum(axis=axis), (a,),
                 (lambda g: np.broadcast_to(np.expand_dims(g, axis), sa).copy(),))


def mean_axis(a: Tensor, axis: int) -> Tensor:
    sa = a.shape
    n = sa[axis]
    return _make(a.data.mean(axis=axis), (a,),
                 (lambda g: np.broadcast_to(np.expand_dims(g, axis) / n, sa).copy(),))


# -- linear algebra ops --------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` for 2-D or batched-3-D ``a`` against a 2-D ``b``."""
    ad, bd = a.data, b.data
    if bd.ndim != 2 or ad.ndim not in (2, 3) or ad.shape[-1] != bd.shape[0]:
        raise ShapeMismatch(f"cannot matmul {ad.shape} @ {bd.shape}")
    if ad.ndim == 2:
        vjp_b = lambda g: ad.T @ g
    else:
        vjp_b = lambda g: np.tensordot(ad, g, axes=([0, 1], [0, 1]))
    return _make(ad @ bd, (a, b), (lambda g: g @ bd.T, vjp_b))


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeMismatch(f"transpose expects a 2-D tensor, got {a.shape}")
    return _make(a.data.T, (a,), (lambda g: g.T,))


def matvec(f: Tensor, w: Tensor) -> Tensor:
    """Per-row matrix-vector product: (B,H,M) with (B,M) -> (B,H)."""
    fd, wd = f.data, w.data
    if fd.ndim != 3 or wd.ndim != 2 or fd.shape[0] != wd.shape[0] or fd.shape[2] != wd.shape[1]:
        raise ShapeMismatch(f"cannot matvec {fd.shape} with {wd.shape}")
    out = np.einsum("bhm,bm->bh", fd, wd)
    return _make(out, (f, w),
                 (lambda g: np.einsum("bh,bm->bhm", g, wd),
                  lambda g: np.einsum("bhm,bh->bm", fd, g)))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def vjp(g: np.ndarray) -> np.ndarray:
        inner = (g * y).sum(axis=axis, keepdims=True)
        return y * (g - inner)

    return _make(y, (a,), (vjp,))


# -- network layers ------------------------------------------------------------

def conv1d_same(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Stride-1, zero-padded 1-D convolution preserving temporal length.

    ``x`` is (B, L, C_in), ``weight`` (K, C_in, C_out), ``bias`` (C_out,).
    Padding is biased left (K//2 left, (K-1)//2 right), so the newest
    observation always aligns with the last output step.
    """
    xd, wd, bd = x.data, weight.data, bias.data
    if xd.ndim != 3 or wd.ndim != 3 or xd.shape[2] != wd.shape[1]:
        raise ShapeMismatch(f"cannot convolve input {xd.shape} with kernel {wd.shape}")
    k, _, c_out = wd.shape
    n_batch, length, _ = xd.shape
    if k > length:
        raise ShapeMismatch(f"kernel size {k} exceeds input length {length}")
    if bd.shape != (c_out,):
        raise ShapeMismatch(f"bias shape {bd.shape} does not match {c_out} output channels")
    left = k // 2
    right = (k - 1) // 2
    padded = np.pad(xd, ((0, 0), (left, right), (0, 0)))
    out = np.broadcast_to(bd, (n_batch, length, c_out)).copy()
    for offset in range(k):
        out += padded[:, offset:offset + length, :] @ wd[offset]

    def vjp_x(g: np.ndarray) -> np.ndarray:
        gp = np.zeros_like(padded)
        for offset in range(k):
            gp[:, offset:offset + length, :] += g @ wd[offset].T
        return gp[:, left:left + length, :]

    def vjp_w(g: np.ndarray) -> np.ndarray:
        gw = np.empty_like(wd)
        for offset in range(k):
            gw[offset] = np.tensordot(padded[:, offset:offset + length, :], g, axes=([0, 1], [0, 1]))
        return gw

    return _make(out, (x, weight, bias),
                 (vjp_x, vjp_w, lambda g: g.sum(axis=(0, 1))))


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the temporal axis: (B, L, C) -> (B, C)."""
    if x.ndim != 3:
        raise ShapeMismatch(f"global_avg_pool expects (B, L, C), got {x.shape}")
    return mean_axis(x, axis=1)


def dense(x: Tensor, weight: Tensor, bias: Tensor, activation: str = "linear") -> Tensor:
    out = add(matmul(x, weight), bias)
    if activation == "linear":
        return out
    if activation == "relu":
        return relu(out)
    if activation == "sigmoid":
        return sigmoid(out)
    raise ValueError(f"unknown activation {activation!r}")


def squeeze_excite(x: Tensor, w_reduce: Tensor, b_reduce: Tensor,
                   w_expand: Tensor, b_expand: Tensor) -> Tensor:
    """Channel attention: pool over time, two dense layers, sigmoid rescale.

    ``x`` is (B, L, C); the reduction layer maps C to ceil(C/r) channels
    and the expansion back to C, whose sigmoid gates rescale each channel.
    """
    if x.ndim != 3:
        raise ShapeMismatch(f"squeeze_excite expects (B, L, C), got {x.shape}")
    descriptor = global_avg_pool(x)
    hidden = dense(descriptor, w_reduce, b_reduce, activation="relu")
    gate = dense(hidden, w_expand, b_expand, activation="sigmoid")
    n_batch, _, channels = x.shape
    return mul(x, reshape(gate, (n_batch, 1, channels)))


# -- reverse pass ---------------------------------------------------------------

def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, params: Sequence[Tensor] = ()) -> list[np.ndarray]:
    """Accumulate gradients of a scalar loss through the whole graph.

    Returns the gradient of each requested parameter; parameters that do
    not reach the loss get a zero gradient and a warning. After the call
    every reached node holds its gradient in ``.grad``.
    """
    if loss.data.size != 1:
        raise ShapeMismatch(f"loss must be scalar, got shape {loss.shape}")
    order = _topological_order(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        g = node.grad
        if g is None:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            if vjp is None:
                continue
            contribution = vjp(g)
            if parent.grad is None:
                parent.grad = contribution
            else:
                parent.grad = parent.grad + contribution
    grads = []
    for p in params:
        if p.grad is None:
            warnings.warn(f"parameter {p.name!r} does not reach the loss; gradient is zero",
                          DisconnectedGraphWarning)
            grads.append(np.zeros_like(p.data))
        else:
            grads.append(p.grad)
    return grads


# -- optimizer -------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment buffers and hyperparameters for Adam."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: Sequence[Parameter], grads: Sequence[np.ndarray]) -> None:
    """One bias-corrected Adam update, in place on the parameters."""
    state.step += 1
    t = state.step
    for p, g in zip(params, grads):
        if g.shape != p.data.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != parameter {p.name} shape {p.data.shape}")
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[p.name] = m
        state.v[p.name] = v
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
