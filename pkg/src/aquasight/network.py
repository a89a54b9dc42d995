"""Network definition, parameter initialization and inference.

A `NetworkSpec` is an ordered stack of layer descriptors validated by
pushing a symbolic shape through every layer at build time.  The reference
architecture (see `reference_spec`) is a small three-block CNN sized to
train on a ~100 image dataset in minutes on one CPU core:

    input 3x64x64
    conv 16x3x3 pad 1 + relu -> maxpool 2
    conv 32x3x3 pad 1 + relu -> maxpool 2
    conv 64x3x3 pad 1 + relu -> maxpool 2
    flatten -> dense 64 + relu -> dropout 0.5 -> dense 1 -> sigmoid

Total parameter count: 285,857 (see README for the per-layer table).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from aquasight import tensor
from aquasight.rng import make_rng
from aquasight.tensor import Tensor


class SpecError(ValueError):
    """A layer stack is internally inconsistent; names the offending layer."""


@dataclass(frozen=True)
class Conv:
    filters: int
    kernel: int
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class MaxPool:
    window: int
    stride: int


@dataclass(frozen=True)
class Dense:
    units: int


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Sigmoid:
    pass


@dataclass(frozen=True)
class Dropout:
    rate: float


@dataclass(frozen=True)
class Flatten:
    pass


Layer = Union[Conv, MaxPool, Dense, Relu, Sigmoid, Dropout, Flatten]


@dataclass(frozen=True)
class NetworkSpec:
    """Input shape plus the ordered layer stack."""

    input_shape: tuple[int, int, int]
    layers: tuple[Layer, ...]

    def shape_after(self, index: int) -> tuple[int, ...]:
        """Symbolic shape after layer `index`, validating every step."""
        shape: tuple[int, ...] = self.input_shape
        for i, layer in enumerate(self.layers[:index + 1]):
            shape = _push_shape(shape, layer, i)
        return shape

    def output_shape(self) -> tuple[int, ...]:
        return self.shape_after(len(self.layers) - 1)

    def validate(self) -> None:
        """Check layer compatibility and the scalar-sigmoid output contract."""
        out = self.output_shape()
        if not self.layers or not isinstance(self.layers[-1], Sigmoid):
            raise SpecError("final layer must be a sigmoid")
        if out != (1,):
            raise SpecError(f"network must end in a single scalar, output shape is {out}")

    def to_text(self) -> str:
        """Canonical one-layer-per-line rendering, stable across versions."""
        lines = ["input %dx%dx%d" % self.input_shape]
        for layer in self.layers:
            if isinstance(layer, Conv):
                lines.append(f"conv filters={layer.filters} kernel={layer.kernel} "
                             f"stride={layer.stride} padding={layer.padding}")
            elif isinstance(layer, MaxPool):
                lines.append(f"maxpool window={layer.window} stride={layer.stride}")
            elif isinstance(layer, Dense):
                lines.append(f"dense units={layer.units}")
            elif isinstance(layer, Dropout):
                lines.append(f"dropout rate={layer.rate!r}")
            elif isinstance(layer, Relu):
                lines.append("relu")
            elif isinstance(layer, Sigmoid):
                lines.append("sigmoid")
            elif isinstance(layer, Flatten):
                lines.append("flatten")
            else:
                raise SpecError(f"unknown layer {layer!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NetworkSpec":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("input "):
            raise SpecError("spec text must start with an input line")
        dims = lines[0].split(None, 1)[1].split("x")
        if len(dims) != 3:
            raise SpecError(f"bad input shape {lines[0]!r}")
        input_shape = tuple(int(d) for d in dims)
        layers: list[Layer] = []
        for ln in lines[1:]:
            parts = ln.split()
            kind, kv = parts[0], dict(p.split("=", 1) for p in parts[1:])
            if kind == "conv":
                layers.append(Conv(int(kv["filters"]), int(kv["kernel"]),
                                   int(kv["stride"]), int(kv["padding"])))
            elif kind == "maxpool":
                layers.append(MaxPool(int(kv["window"]), int(kv["stride"])))
            elif kind == "dense":
                layers.append(Dense(int(kv["units"])))
            elif kind == "dropout":
                layers.append(Dropout(float(kv["rate"])))
            elif kind == "relu":
                layers.append(Relu())
            elif kind == "sigmoid":
                layers.append(Sigmoid())
            elif kind == "flatten":
                layers.append(Flatten())
            else:
                raise SpecError(f"unknown layer kind {kind!r}")
        return cls(input_shape=input_shape, layers=tuple(layers))


def _push_shape(shape: tuple[int, ...], layer: Layer, index: int) -> tuple[int, ...]:
    name = type(layer).__name__.lower()
    if isinstance(layer, Conv):
        if len(shape) != 3:
            raise SpecError(f"layer {index} (conv): needs [C,H,W] input, has {shape}")
        c, h, w = shape
        if layer.kernel > h + 2 * layer.padding or layer.kernel > w + 2 * layer.padding:
            raise SpecError(f"layer {index} (conv): kernel {layer.kernel} exceeds "
                            f"padded input {h + 2 * layer.padding}x{w + 2 * layer.padding}")
        if layer.stride < 1:
            raise SpecError(f"layer {index} (conv): stride must be positive")
        h2 = (h + 2 * layer.padding - layer.kernel) // layer.stride + 1
        w2 = (w + 2 * layer.padding - layer.kernel) // layer.stride + 1
        return (layer.filters, h2, w2)
    if isinstance(layer, MaxPool):
        if len(shape) != 3:
            raise SpecError(f"layer {index} (maxpool): needs [C,H,W] input, has {shape}")
        c, h, w = shape
        if layer.window > h or layer.window > w:
            raise SpecError(f"layer {index} (maxpool): window {layer.window} exceeds {h}x{w}")
        return (c, (h - layer.window) // layer.stride + 1,
                (w - layer.window) // layer.stride + 1)
    if isinstance(layer, Dense):
        if len(shape) != 1:
            raise SpecError(f"layer {index} (dense): needs a flat input, has {shape}")
        return (layer.units,)
    if isinstance(layer, Flatten):
        return (int(np.prod(shape)),)
    if isinstance(layer, (Relu, Sigmoid, Dropout)):
        return shape
    raise SpecError(f"layer {index}: unknown kind {name}")


def reference_spec() -> NetworkSpec:
    """The documented reference architecture for 3x64x64 water images."""
    return NetworkSpec(
        input_shape=(3, 64, 64),
        layers=(
            Conv(filters=16, kernel=3, stride=1, padding=1), Relu(),
            MaxPool(window=2, stride=2),
            Conv(filters=32, kernel=3, stride=1, padding=1), Relu(),
            MaxPool(window=2, stride=2),
            Conv(filters=64, kernel=3, stride=1, padding=1), Relu(),
            MaxPool(window=2, stride=2),
            Flatten(),
            Dense(units=64), Relu(),
            Dropout(rate=0.5),
            Dense(units=1),
            Sigmoid(),
        ),
    )


class Network:
    """A spec plus its parameters.

    Parameter names are `layerNN.weight` / `layerNN.bias` with NN the layer's
    position in the spec, so they stay unique and stable across save/load.
    An eval-mode network is immutable during inference and safe to share
    between threads; training requires exclusive access.
    """

    def __init__(self, spec: NetworkSpec, params: dict[str, Tensor],
                 mode: str = "eval"):
        self.spec = spec
        self.params = params
        self.mode = mode
        self.weights_checksum: Optional[str] = None  # set by the weights loader
        self._dropout_rng: Optional[np.random.Generator] = None

    def train(self) -> None:
        self.mode = "train"

    def eval(self) -> None:
        self.mode = "eval"

    def seed_dropout(self, seed: int) -> None:
        self._dropout_rng = make_rng(seed, "dropout")

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def sorted_params(self) -> list[tuple[str, Tensor]]:
        return sorted(self.params.items())

    def forward(self, image: Tensor) -> Tensor:
        if image.shape != self.spec.input_shape:
            raise ShapeMismatch(image.shape, self.spec.input_shape)
        x = image
        for i, layer in enumerate(self.spec.layers):
            if isinstance(layer, Conv):
                x = tensor.conv2d(x, self.params[f"layer{i:02d}.weight"],
                                  self.params[f"layer{i:02d}.bias"],
                                  stride=layer.stride, padding=layer.padding)
            elif isinstance(layer, MaxPool):
                x = tensor.maxpool2d(x, layer.window, layer.stride)
            elif isinstance(layer, Dense):
                x = tensor.dense(x, self.params[f"layer{i:02d}.weight"],
                                 self.params[f"layer{i:02d}.bias"])
            elif isinstance(layer, Relu):
                x = tensor.relu(x)
            elif isinstance(layer, Sigmoid):
                x = tensor.sigmoid(x)
            elif isinstance(layer, Flatten):
                x = tensor.flatten(x)
            elif isinstance(layer, Dropout):
                if self.mode == "train" and self._dropout_rng is None:
                    raise RuntimeError("train-mode forward before seed_dropout()")
                x = tensor.dropout(x, layer.rate, self.mode, self._dropout_rng)
        return x


class ShapeMismatch(ValueError):
    def __init__(self, got: tuple, want: tuple):
        super().__init__(f"input shape {got} does not match network input {want}")


def build(spec: NetworkSpec, init_seed: int) -> Network:
    """Initialize a network: fan-in scaled uniform weights, zero biases.

    Layers feeding a relu use the wider bound sqrt(6/fan_in); the sigmoid
    head uses sqrt(6/(fan_in+fan_out)).  The same seed always produces
    bit-identical parameters.
    """
    spec.validate()
    rng = make_rng(init_seed, "init")
    params: dict[str, Tensor] = {}
    shape: tuple[int, ...] = spec.input_shape
    for i, layer in enumerate(spec.layers):
        next_is_relu = i + 1 < len(spec.layers) and isinstance(spec.layers[i + 1], Relu)
        if isinstance(layer, Conv):
            c_in = shape[0]
            fan_in = c_in * layer.kernel * layer.kernel
            fan_out = layer.filters * layer.kernel * layer.kernel
            bound = _init_bound(fan_in, fan_out, next_is_relu)
            wshape = (layer.filters, c_in, layer.kernel, layer.kernel)
            params[f"layer{i:02d}.weight"] = Tensor(
                rng.uniform(-bound, bound, size=wshape), requires_grad=True)
            params[f"layer{i:02d}.bias"] = Tensor(
                np.zeros(layer.filters), requires_grad=True)
        elif isinstance(layer, Dense):
            fan_in = shape[0]
            bound = _init_bound(fan_in, layer.units, next_is_relu)
            params[f"layer{i:02d}.weight"] = Tensor(
                rng.uniform(-bound, bound, size=(layer.units, fan_in)), requires_grad=True)
            params[f"layer{i:02d}.bias"] = Tensor(
                np.zeros(layer.units), requires_grad=True)
        shape = _push_shape(shape, layer, i)
    return Network(spec, params, mode="eval")


def _init_bound(fan_in: int, fan_out: int, relu_next: bool) -> float:
    if relu_next:
        return float(np.sqrt(6.0 / fan_in))
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def predict(net: Network, image) -> float:
    """Eval-mode forward pass; returns the sigmoid score in (0, 1)."""
    if net.mode != "eval":
        raise RuntimeError("predict requires eval mode; call net.eval() first")
    x = image if isinstance(image, Tensor) else Tensor(image)
    return net.forward(x).item()
