"""Dense float64 tensors with reverse-mode gradients.

The engine covers exactly the layer set the water classifier needs:
conv2d, maxpool2d, dense, relu, sigmoid, dropout, flatten, plus a binary
cross-entropy loss node.  Each op output records its producing op kind, its
input tensors and a backward closure over the values cached during the
forward pass; `backward()` replays those closures in reverse topological
order of the forward pass.

Gradients accumulate additively: calling `backward()` twice without
`zero_grad()` in between adds the two gradient fields.  That is the
documented behaviour (it is what per-sample accumulation over a minibatch
relies on), not an error.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Smallest/largest doubles strictly inside (0, 1); sigmoid output is clamped
# to this open interval so downstream logs stay finite.
_SIGMOID_LO = float(np.nextafter(0.0, 1.0))
_SIGMOID_HI = float(np.nextafter(1.0, 0.0))

# Predictions are clamped to [BCE_EPS, 1 - BCE_EPS] before the log.
BCE_EPS = 1e-12


class ShapeError(ValueError):
    """Operand shapes cannot be combined; the message names the offenders."""


class Tensor:
    """A float64 array, an optional gradient buffer, and autodiff hooks."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents", "_op")

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple = (), _op: str = "leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = np.zeros_like(self.data) if requires_grad else None
        self._backward: Optional[Callable[[], None]] = None
        self._parents = _parents
        self._op = _op

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self, upstream: float = 1.0) -> None:
        """Accumulate d(self)/d(param) into every reachable grad buffer.

        `upstream` scales the seed gradient; a training loop averaging a
        minibatch of B per-sample losses passes 1/B.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, shape is {self.shape}")
        if not self.requires_grad:
            raise ValueError("backward() on a tensor with no gradient path")

        topo: list[Tensor] = []
        seen: set[int] = set()

        def visit(node: "Tensor") -> None:
            if id(node) in seen:
                return
            seen.add(id(node))
            for parent in node._parents:
                visit(parent)
            topo.append(node)

        visit(self)
        self.grad += upstream
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r}, requires_grad={self.requires_grad})"


def _result(data: np.ndarray, parents: tuple, op: str) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=needs, _parents=parents if needs else (), _op=op)


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlate `kernels` [C_out,C_in,kH,kW] over `x` [C_in,H,W]."""
    if x.data.ndim != 3:
        raise ShapeError(f"conv2d input must be [C,H,W], got {x.shape}")
    if kernels.data.ndim != 4:
        raise ShapeError(f"conv2d kernels must be [C_out,C_in,kH,kW], got {kernels.shape}")
    if not isinstance(stride, int) or stride < 1:
        raise ShapeError(f"conv2d stride must be a positive int, got {stride!r}")
    if padding < 0:
        raise ShapeError(f"conv2d padding must be >= 0, got {padding}")
    c_in, h, w = x.shape
    c_out, kc, kh, kw = kernels.shape
    if kc != c_in:
        raise ShapeError(f"kernel expects {kc} input channels, input has {c_in} "
                         f"(input {x.shape}, kernels {kernels.shape})")
    if bias.shape != (c_out,):
        raise ShapeError(f"bias shape {bias.shape} must be ({c_out},)")
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ShapeError(f"kernel {kh}x{kw} larger than padded input "
                         f"{h + 2 * padding}x{w + 2 * padding}")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # windows: [C_in, H', W', kH, kW]; contract C_in and the kernel window
    out = np.tensordot(kernels.data, windows, axes=([1, 2, 3], [0, 3, 4]))
    out += bias.data[:, None, None]
    result = _result(out, (x, kernels, bias), "conv2d")

    h_out, w_out = out.shape[1], out.shape[2]

    def backward() -> None:
        g = result.grad
        if bias.requires_grad:
            bias.grad += g.sum(axis=(1, 2))
        if kernels.requires_grad:
            kernels.grad += np.tensordot(g, windows, axes=([1, 2], [1, 2]))
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for ki in range(kh):
                for kj in range(kw):
                    # every output position (i,j) reads xp[ki + i*stride, kj + j*stride]
                    gxp[:, ki:ki + h_out * stride:stride, kj:kj + w_out * stride:stride] += \
                        np.tensordot(kernels.data[:, :, ki, kj], g, axes=([0], [0]))
            if padding:
                x.grad += gxp[:, padding:padding + h, padding:padding + w]
            else:
                x.grad += gxp

    result._backward = backward if result.requires_grad else None
    return result


def maxpool2d(x: Tensor, window: int, stride: int) -> Tensor:
    """Max over `window`x`window` patches; gradient flows to the first argmax."""
    if x.data.ndim != 3:
        raise ShapeError(f"maxpool2d input must be [C,H,W], got {x.shape}")
    if window < 1 or stride < 1:
        raise ShapeError(f"window and stride must be positive, got {window}, {stride}")
    c, h, w = x.shape
    if window > h or window > w:
        raise ShapeError(f"pool window {window} exceeds spatial dims {h}x{w}")

    patches = sliding_window_view(x.data, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    c_, h_out, w_out = patches.shape[:3]
    flat = patches.reshape(c_, h_out, w_out, window * window)
    argmax = flat.argmax(axis=3)  # first index wins ties, row-major in the window
    out = np.take_along_axis(flat, argmax[..., None], axis=3)[..., 0]
    result = _result(out, (x,), "maxpool2d")

    def backward() -> None:
        g = result.grad
        rows = (np.arange(h_out) * stride)[None, :, None] + argmax // window
        cols = (np.arange(w_out) * stride)[None, None, :] + argmax % window
        chan = np.broadcast_to(np.arange(c)[:, None, None], argmax.shape)
        gx = np.zeros_like(x.data)
        np.add.at(gx, (chan, rows, cols), g)
        x.grad += gx

    result._backward = backward if result.requires_grad else None
    return result


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map: weights [M,N] @ x [N] + bias [M]."""
    if x.data.ndim != 1:
        raise ShapeError(f"dense input must be a vector, got {x.shape}")
    if weights.data.ndim != 2:
        raise ShapeError(f"dense weights must be [M,N], got {weights.shape}")
    m, n = weights.shape
    if n != x.size:
        raise ShapeError(f"dense weights {weights.shape} incompatible with input {x.shape}")
    if bias.shape != (m,):
        raise ShapeError(f"dense bias {bias.shape} must be ({m},)")

    out = weights.data @ x.data + bias.data
    result = _result(out, (x, weights, bias), "dense")

    def backward() -> None:
        g = result.grad
        if bias.requires_grad:
            bias.grad += g
        if weights.requires_grad:
            weights.grad += np.outer(g, x.data)
        if x.requires_grad:
            x.grad += weights.data.T @ g

    result._backward = backward if result.requires_grad else None
    return result


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0.0)
    result = _result(out, (x,), "relu")

    def backward() -> None:
        x.grad += (x.data > 0.0) * result.grad

    result._backward = backward if result.requires_grad else None
    return result


def sigmoid(x: Tensor) -> Tensor:
    """1/(1+e^-x), numerically stable, output strictly inside (0, 1)."""
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)
    np.clip(out, _SIGMOID_LO, _SIGMOID_HI, out=out)
    result = _result(out, (x,), "sigmoid")

    def backward() -> None:
        x.grad += out * (1.0 - out) * result.grad

    result._backward = backward if result.requires_grad else None
    return result


def dropout(x: Tensor, rate: float, mode: str,
            rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout: train mode zeroes with probability `rate` and scales
    survivors by 1/(1-rate); eval mode is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ValueError(f"dropout mode must be 'train' or 'eval', got {mode!r}")

    if mode == "eval" or rate == 0.0:
        result = _result(x.data.copy(), (x,), "dropout")

        def backward_identity() -> None:
            x.grad += result.grad

        result._backward = backward_identity if result.requires_grad else None
        return result

    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    scale = 1.0 / (1.0 - rate)
    mask = (rng.random(x.shape) >= rate) * scale
    result = _result(x.data * mask, (x,), "dropout")

    def backward() -> None:
        x.grad += mask * result.grad

    result._backward = backward if result.requires_grad else None
    return result


def flatten(x: Tensor) -> Tensor:
    result = _result(x.data.reshape(-1), (x,), "flatten")

    def backward() -> None:
        x.grad += result.grad.reshape(x.shape)

    result._backward = backward if result.requires_grad else None
    return result


def binary_cross_entropy(prediction: Tensor, target: float) -> Tensor:
    """Scalar loss -[y ln p + (1-y) ln(1-p)] with p clamped to [eps, 1-eps]."""
    if prediction.data.size != 1:
        raise ShapeError(f"loss needs a scalar prediction, got shape {prediction.shape}")
    if target not in (0, 1, 0.0, 1.0):
        raise ValueError(f"target must be 0 or 1, got {target!r}")
    p = float(np.clip(prediction.data.reshape(-1)[0], BCE_EPS, 1.0 - BCE_EPS))
    y = float(target)
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    result = _result(np.asarray(loss), (prediction,), "bce")

    def backward() -> None:
        g = float(result.grad)
        prediction.grad += ((p - y) / (p * (1.0 - p))) * g

    result._backward = backward if result.requires_grad else None
    return result
