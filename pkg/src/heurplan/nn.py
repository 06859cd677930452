"""Rank-4 array kernels: forward and backward passes for every layer the
heuristic network needs, plus Adam and the shifted-minimum value operator.

Arrays are float64 throughout with (batch, channel, height, width) layout;
gradients are returned as separate arrays of the same shape. Convolution
weights are (out_ch, in_ch, kh, kw); transposed-convolution weights are
(in_ch, out_ch, kh, kw). All kernels use fixed loop orders, so results are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .grid import MOVES


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one (de)convolution layer."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: int = 1
    dilation: int = 1
    padding: int = 0

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.stride, self.dilation) < 1:
            raise ValueError(f"invalid spec {self}")
        if min(self.kernel) < 1 or self.padding < 0:
            raise ValueError(f"invalid spec {self}")

    def conv_out_hw(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.kernel
        oh = (h + 2 * self.padding - self.dilation * (kh - 1) - 1) // self.stride + 1
        ow = (w + 2 * self.padding - self.dilation * (kw - 1) - 1) // self.stride + 1
        if oh < 1 or ow < 1:
            raise ValueError(f"spec {self} yields empty output for {h}x{w} input")
        return oh, ow

    def deconv_out_hw(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.kernel
        oh = (h - 1) * self.stride - 2 * self.padding + kh
        ow = (w - 1) * self.stride - 2 * self.padding + kw
        if oh < 1 or ow < 1:
            raise ValueError(f"spec {self} yields empty output for {h}x{w} input")
        return oh, ow


def _check_input(x: np.ndarray, spec: ConvSpec, channels: int) -> None:
    if x.ndim != 4:
        raise ValueError(f"expected rank-4 input, got shape {x.shape}")
    if x.shape[1] != channels:
        raise ValueError(f"input has {x.shape[1]} channels, spec wants {channels}")


def _windows(xp: np.ndarray, oh: int, ow: int, spec: ConvSpec) -> np.ndarray:
    """(b, c, oh, ow, kh, kw) sliding view over the zero-padded input."""
    b, c = xp.shape[:2]
    kh, kw = spec.kernel
    bs, cs, rs, ws = xp.strides
    return as_strided(
        xp,
        (b, c, oh, ow, kh, kw),
        (bs, cs, spec.stride * rs, spec.stride * ws, spec.dilation * rs, spec.dilation * ws),
        writeable=False,
    )


def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def conv2d_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Cross-correlation with zero padding, stride, and dilation."""
    _check_input(x, spec, spec.in_channels)
    if w.shape != (spec.out_channels, spec.in_channels, *spec.kernel):
        raise ValueError(f"weight shape {w.shape} does not match spec {spec}")
    oh, ow = spec.conv_out_hw(x.shape[2], x.shape[3])
    win = _windows(_pad(x, spec.padding), oh, ow, spec)
    out = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (b, oh, ow, co)
    out += b
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_bwd(
    x: np.ndarray, w: np.ndarray, spec: ConvSpec, up: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of conv2d_fwd with respect to input, weights, and bias."""
    oh, ow = spec.conv_out_hw(x.shape[2], x.shape[3])
    if up.shape != (x.shape[0], spec.out_channels, oh, ow):
        raise ValueError(f"upstream shape {up.shape} does not match forward output")
    p, s, d = spec.padding, spec.stride, spec.dilation
    kh, kw = spec.kernel

    gb = up.sum(axis=(0, 2, 3))
    xp = _pad(x, p)
    win = _windows(xp, oh, ow, spec)
    gw = np.tensordot(up, win, axes=([0, 2, 3], [0, 2, 3]))  # (co, ci, kh, kw)

    gxp = np.zeros_like(xp)
    for u in range(kh):
        for v in range(kw):
            # (b, oh, ow, ci) contribution of kernel tap (u, v)
            contrib = np.tensordot(up, w[:, :, u, v], axes=([1], [0]))
            gxp[:, :, u * d : u * d + s * oh : s, v * d : v * d + s * ow : s] += (
                contrib.transpose(0, 3, 1, 2)
            )
    gx = gxp[:, :, p : p + x.shape[2], p : p + x.shape[3]]
    return np.ascontiguousarray(gx), gw, gb


def deconv2d_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Transposed convolution (exact adjoint of conv2d_fwd with the same spec)."""
    _check_input(x, spec, spec.in_channels)
    if w.shape != (spec.in_channels, spec.out_channels, *spec.kernel):
        raise ValueError(f"weight shape {w.shape} does not match spec {spec}")
    bsz, _, h, ww = x.shape
    oh, ow = spec.deconv_out_hw(h, ww)
    p, s = spec.padding, spec.stride
    kh, kw = spec.kernel

    outp = np.zeros((bsz, spec.out_channels, oh + 2 * p, ow + 2 * p))
    for u in range(kh):
        for v in range(kw):
            contrib = np.tensordot(x, w[:, :, u, v], axes=([1], [0]))  # (b, h, w, co)
            outp[:, :, u : u + s * h : s, v : v + s * ww : s] += contrib.transpose(0, 3, 1, 2)
    out = outp[:, :, p : p + oh, p : p + ow]
    out += b[:, None, None]
    return np.ascontiguousarray(out)


def deconv2d_bwd(
    x: np.ndarray, w: np.ndarray, spec: ConvSpec, up: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of deconv2d_fwd."""
    bsz, _, h, ww = x.shape
    oh, ow = spec.deconv_out_hw(h, ww)
    if up.shape != (bsz, spec.out_channels, oh, ow):
        raise ValueError(f"upstream shape {up.shape} does not match forward output")

    gb = up.sum(axis=(0, 2, 3))
    upp = _pad(up, spec.padding)
    b2, c2 = upp.shape[:2]
    bs, cs, rs, ws = upp.strides
    kh, kw = spec.kernel
    win = as_strided(
        upp,
        (b2, c2, h, ww, kh, kw),
        (bs, cs, spec.stride * rs, spec.stride * ws, rs, ws),
        writeable=False,
    )
    gx = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (b, h, w, ci)
    gw = np.tensordot(x, win, axes=([0, 2, 3], [0, 2, 3]))  # (ci, co, kh, kw)
    return np.ascontiguousarray(gx.transpose(0, 3, 1, 2)), gw, gb


def batchnorm_fwd(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    run_mean: np.ndarray,
    run_var: np.ndarray,
    train: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> tuple[np.ndarray, tuple]:
    """Per-channel batch normalization.

    Train mode normalizes with batch statistics and folds them into the
    running estimates in place (running = momentum * running + (1-m) * batch,
    biased variance). Eval mode reads the running estimates and mutates
    nothing. Returns (output, cache-for-backward).
    """
    if x.shape[0] == 0:
        raise ValueError("batch normalization over an empty batch")
    if train:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        run_mean *= momentum
        run_mean += (1.0 - momentum) * mean
        run_var *= momentum
        run_var += (1.0 - momentum) * var
    else:
        mean, var = run_mean, run_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[:, None, None]) * inv_std[:, None, None]
    out = gamma[:, None, None] * xhat + beta[:, None, None]
    return out, (xhat, inv_std, gamma, train)


def batchnorm_bwd(cache: tuple, up: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of batchnorm_fwd (train mode) wrt input, gamma, beta."""
    xhat, inv_std, gamma, train = cache
    if not train:
        raise ValueError("backward through eval-mode batch norm is not supported")
    n = xhat.shape[0] * xhat.shape[2] * xhat.shape[3]
    gbeta = up.sum(axis=(0, 2, 3))
    ggamma = (up * xhat).sum(axis=(0, 2, 3))
    scale = (gamma * inv_std / n)[:, None, None]
    gx = scale * (n * up - gbeta[:, None, None] - xhat * ggamma[:, None, None])
    return gx, ggamma, gbeta


def leaky_relu_fwd(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_bwd(x: np.ndarray, up: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return up * np.where(x > 0, 1.0, slope)


def masked_sq_loss(
    pred: np.ndarray, target: np.ndarray, mask: np.ndarray
) -> tuple[float, np.ndarray]:
    """Sum of squared errors over masked cells; gradient wrt the prediction.

    Target values outside the mask are ignored entirely, so they may hold
    sentinels such as +inf without poisoning the sum.
    """
    if pred.shape != target.shape or pred.shape != mask.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {mask.shape}"
        )
    d = np.where(mask.astype(bool), pred - target, 0.0)
    loss = float((d * d).sum())
    return loss, 2.0 * d


class Adam(object):
    """Bias-corrected Adam over a named parameter set.

    Moment buffers are created lazily per parameter name; `step` updates the
    parameters in place.
    """

    def __init__(self, lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name in params:
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def shift_min(x: np.ndarray, moves=MOVES) -> np.ndarray:
    """Minimum over the 8 successor shifts of (edge cost + shifted value).

    Works on any array whose last two axes are spatial. Out-of-bounds
    successors contribute +inf, so border cells only see their in-bounds
    neighbors.
    """
    h, w = x.shape[-2], x.shape[-1]
    pad_spec = [(0, 0)] * (x.ndim - 2) + [(1, 1), (1, 1)]
    xp = np.pad(x, pad_spec, constant_values=np.inf)
    out = np.full_like(x, np.inf)
    for dr, dc, cost in moves:
        np.minimum(out, xp[..., 1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] + cost, out=out)
    return out
