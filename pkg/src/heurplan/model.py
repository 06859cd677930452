"""Encoder-decoder fully convolutional network mapping a 3-channel feature
stack to a single-channel heuristic map, plus versioned weight persistence.

The encoder applies three modules of three 3x3 convolutions each (stride 2 in
the first, dilation factors 1/2/3, each followed by batch norm and leaky
ReLU) at 16/32/64 channels. The decoder mirrors this with three modules whose
first op is a 4x4 stride-2 transposed convolution, at 32/16/16 channels; the
very last convolution emits one raw channel (no normalization or activation,
since cost-to-go is unbounded above). Spatial dims shrink by 8x through the
encoder and recover exactly through the decoder, so inputs must be divisible
by 8.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .nn import (
    ConvSpec,
    batchnorm_bwd,
    batchnorm_fwd,
    conv2d_bwd,
    conv2d_fwd,
    deconv2d_bwd,
    deconv2d_fwd,
    leaky_relu_bwd,
    leaky_relu_fwd,
)

_MAGIC = b"HNET"
_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    in_channels: int = 3
    encoder_channels: tuple[int, int, int] = (16, 32, 64)
    decoder_channels: tuple[int, int, int] = (32, 16, 16)
    dilations: tuple[int, int, int] = (1, 2, 3)

    def __post_init__(self):
        if len(self.encoder_channels) != 3 or len(self.decoder_channels) != 3:
            raise ValueError("exactly 3 encoder and 3 decoder modules required")
        if len(self.dilations) != 3:
            raise ValueError("one dilation per op within a module required")


@dataclass(frozen=True)
class _Layer:
    kind: str  # "conv" or "deconv"
    name: str
    spec: ConvSpec
    bn: bool
    act: bool


def layer_plan(config: ModelConfig) -> list[_Layer]:
    """The fixed op sequence; weight names derive from layer names."""
    d2, d3 = config.dilations[1], config.dilations[2]
    plan: list[_Layer] = []
    cin = config.in_channels
    for i, c in enumerate(config.encoder_channels, start=1):
        plan.append(_Layer("conv", f"enc{i}.conv1", ConvSpec(cin, c, (3, 3), stride=2, padding=1), True, True))
        plan.append(_Layer("conv", f"enc{i}.conv2", ConvSpec(c, c, (3, 3), dilation=d2, padding=d2), True, True))
        plan.append(_Layer("conv", f"enc{i}.conv3", ConvSpec(c, c, (3, 3), dilation=d3, padding=d3), True, True))
        cin = c
    for i, c in enumerate(config.decoder_channels, start=1):
        last = i == len(config.decoder_channels)
        plan.append(_Layer("deconv", f"dec{i}.deconv", ConvSpec(cin, c, (4, 4), stride=2, padding=1), True, True))
        plan.append(_Layer("conv", f"dec{i}.conv2", ConvSpec(c, c, (3, 3), dilation=d2, padding=d2), True, True))
        cout = 1 if last else c
        plan.append(_Layer("conv", f"dec{i}.conv3", ConvSpec(c, cout, (3, 3), dilation=d3, padding=d3), not last, not last))
        cin = c
    return plan


def _weight_entries(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Expected (name, shape) pairs in serialization order."""
    entries: list[tuple[str, tuple[int, ...]]] = []
    for layer in layer_plan(config):
        s = layer.spec
        if layer.kind == "conv":
            wshape = (s.out_channels, s.in_channels, *s.kernel)
        else:
            wshape = (s.in_channels, s.out_channels, *s.kernel)
        entries.append((layer.name + ".w", wshape))
        entries.append((layer.name + ".b", (s.out_channels,)))
        if layer.bn:
            for suffix in (".gamma", ".beta", ".run_mean", ".run_var"):
                entries.append((layer.name + suffix, (s.out_channels,)))
    return entries


class WeightFormatError(ValueError):
    """A weight file or weight dict does not match the model."""


class HeuristicNet:
    """The network with its weights; forward, backward, and persistence."""

    def __init__(self, config: ModelConfig, weights: dict[str, np.ndarray]):
        expected = _weight_entries(config)
        names = {name for name, _ in expected}
        for name in weights:
            if name not in names:
                raise WeightFormatError(f"unexpected weight entry {name!r}")
        checked: dict[str, np.ndarray] = {}
        for name, shape in expected:
            if name not in weights:
                raise WeightFormatError(f"missing weight entry {name!r}")
            arr = np.asarray(weights[name], dtype=np.float64)
            if arr.shape != shape:
                raise WeightFormatError(
                    f"weight entry {name!r} has shape {arr.shape}, expected {shape}"
                )
            checked[name] = arr
        self.config = config
        self.plan = layer_plan(config)
        self.weights = checked

    @classmethod
    def build(cls, config: ModelConfig | None = None, seed: int = 0) -> "HeuristicNet":
        """Fresh weights: fan-in-scaled normal kernels, zero biases, identity norm."""
        config = config or ModelConfig()
        rng = np.random.default_rng(seed)
        weights: dict[str, np.ndarray] = {}
        for name, shape in _weight_entries(config):
            if name.endswith(".w"):
                # input channels live on axis 1 for conv, axis 0 for deconv
                cin = shape[0] if ".deconv." in name else shape[1]
                fan_in = cin * shape[2] * shape[3]
                weights[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
            elif name.endswith((".gamma", ".run_var")):
                weights[name] = np.ones(shape)
            else:
                weights[name] = np.zeros(shape)
        return cls(config, weights)

    def trainable(self) -> dict[str, np.ndarray]:
        """Parameters Adam updates; excludes batch-norm running statistics."""
        return {
            n: a for n, a in self.weights.items() if not n.endswith((".run_mean", ".run_var"))
        }

    def parameter_count(self) -> int:
        return sum(a.size for a in self.trainable().values())

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ValueError(
                f"expected (batch, {self.config.in_channels}, H, W) input, got {x.shape}"
            )
        if x.shape[2] % 8 or x.shape[3] % 8:
            raise ValueError(
                f"input is {x.shape[2]}x{x.shape[3]}; spatial dims must be divisible by 8"
                " (pad the feature stack before calling)"
            )
        return x

    def _run(self, x: np.ndarray, train: bool, caches: list | None) -> np.ndarray:
        w = self.weights
        for layer in self.plan:
            x_in = x
            if layer.kind == "conv":
                x = conv2d_fwd(x, w[layer.name + ".w"], w[layer.name + ".b"], layer.spec)
            else:
                x = deconv2d_fwd(x, w[layer.name + ".w"], w[layer.name + ".b"], layer.spec)
            bn_cache = None
            if layer.bn:
                x, bn_cache = batchnorm_fwd(
                    x,
                    w[layer.name + ".gamma"],
                    w[layer.name + ".beta"],
                    w[layer.name + ".run_mean"],
                    w[layer.name + ".run_var"],
                    train=train,
                )
            z_bn = x
            if layer.act:
                x = leaky_relu_fwd(x)
            if caches is not None:
                caches.append((layer, x_in, bn_cache, z_bn))
        return x

    def forward(self, x: np.ndarray, mode: str = "eval") -> np.ndarray:
        """One pass over a batch; eval mode is a pure function of the weights,
        train mode folds batch statistics into the running estimates."""
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        return self._run(self._check_input(x), mode == "train", None)

    def forward_train(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Train-mode forward keeping the per-layer caches backward() needs."""
        caches: list = []
        out = self._run(self._check_input(x), True, caches)
        return out, caches

    def backward(
        self, caches: list, upstream: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Gradients of a scalar loss wrt every trainable parameter and wrt
        the network input, given the loss gradient wrt the network output."""
        grads: dict[str, np.ndarray] = {}
        up = upstream
        for layer, x_in, bn_cache, z_bn in reversed(caches):
            if layer.act:
                up = leaky_relu_bwd(z_bn, up)
            if layer.bn:
                up, ggamma, gbeta = batchnorm_bwd(bn_cache, up)
                grads[layer.name + ".gamma"] = ggamma
                grads[layer.name + ".beta"] = gbeta
            w = self.weights[layer.name + ".w"]
            if layer.kind == "conv":
                up, gw, gb = conv2d_bwd(x_in, w, layer.spec, up)
            else:
                up, gw, gb = deconv2d_bwd(x_in, w, layer.spec, up)
            grads[layer.name + ".w"] = gw
            grads[layer.name + ".b"] = gb
        return grads, up

    def save(self, path) -> None:
        """Versioned binary container, bit-exact round trip."""
        entries = _weight_entries(self.config)
        blob = bytearray()
        blob += _MAGIC
        blob += struct.pack("<II", _VERSION, len(entries))
        for name, _ in entries:
            arr = np.ascontiguousarray(self.weights[name], dtype="<f8")
            raw_name = name.encode("ascii")
            blob += struct.pack("<H", len(raw_name))
            blob += raw_name
            blob += struct.pack("<B", arr.ndim)
            blob += struct.pack(f"<{arr.ndim}Q", *arr.shape)
            blob += arr.tobytes()
        with open(path, "wb") as f:
            f.write(bytes(blob))

    @classmethod
    def load(cls, path, config: ModelConfig | None = None) -> "HeuristicNet":
        """Parse and validate a weight file; any defect raises WeightFormatError
        naming the offending entry and leaves no partial state behind."""
        config = config or ModelConfig()
        with open(path, "rb") as f:
            blob = f.read()
        if blob[:4] != _MAGIC:
            raise WeightFormatError(f"{path}: not a weight file (bad magic)")
        if len(blob) < 12:
            raise WeightFormatError(f"{path}: truncated header")
        version, count = struct.unpack_from("<II", blob, 4)
        if version != _VERSION:
            raise WeightFormatError(f"{path}: unsupported format version {version}")
        offset = 12
        weights: dict[str, np.ndarray] = {}
        for _ in range(count):
            try:
                (name_len,) = struct.unpack_from("<H", blob, offset)
                offset += 2
                name = blob[offset : offset + name_len].decode("ascii")
                offset += name_len
                (ndim,) = struct.unpack_from("<B", blob, offset)
                offset += 1
                shape = struct.unpack_from(f"<{ndim}Q", blob, offset)
                offset += 8 * ndim
                nbytes = 8 * int(np.prod(shape, dtype=np.int64))
                data = blob[offset : offset + nbytes]
                if len(data) != nbytes:
                    raise struct.error("short read")
                offset += nbytes
            except (struct.error, UnicodeDecodeError) as exc:
                raise WeightFormatError(f"{path}: truncated weight file") from exc
            weights[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
        if offset != len(blob):
            raise WeightFormatError(f"{path}: {len(blob) - offset} trailing bytes")
        return cls(config, weights)
