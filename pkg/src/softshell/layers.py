"""Layer forward/backward passes: convolution, max-pooling, ReLU, flatten,
dense, and softmax.

Every forward returns (output, cache); the matching backward consumes the
cache exactly once and returns exact analytic gradients. There is no autodiff
here, each backward is written against its forward by hand and checked with
finite differences in the test suite.

All spatial ops accept a single sample (C, H, W) or a batch (N, C, H, W);
dense and flatten likewise accept one sample or a batch. Convolution runs as
im2col plus one matrix product, which sums each output element over the same
(channel, row, col) window order a direct sliding window would use, so the
two agree exactly whenever the summands are exactly representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class ConvLayer:
    """2D convolution parameters: kernels (out_ch, in_ch, kh, kw) plus bias."""

    kernels: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        if self.kernels.ndim != 4:
            raise ShapeError("conv kernels must have shape (out_ch, in_ch, kh, kw)")
        out_ch, _, kh, kw = self.kernels.shape
        if out_ch < 1 or kh < 1 or kw < 1:
            raise ShapeError(f"invalid kernel shape {self.kernels.shape}")
        if self.bias.shape != (out_ch,):
            raise ShapeError(f"bias shape {self.bias.shape} does not match {out_ch} output channels")
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"padding must be >= 0, got {self.padding}")


@dataclass
class DenseLayer:
    """Fully connected parameters: weights (out, in) plus bias (out,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ShapeError("dense weights must be rank-2 (out, in)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match {self.weights.shape[0]} outputs")


@dataclass
class ConvCache:
    cols: np.ndarray
    input_shape: tuple
    out_hw: tuple
    batched: bool


@dataclass
class PoolCache:
    argmax: np.ndarray
    input_shape: tuple
    window: int
    stride: int
    batched: bool


@dataclass
class ReluCache:
    mask: np.ndarray


@dataclass
class FlattenCache:
    input_shape: tuple
    batched: bool


@dataclass
class DenseCache:
    x: np.ndarray
    batched: bool


def _as_batch(x, rank, what):
    if x.ndim == rank:
        return x[None], False
    if x.ndim == rank + 1:
        return x, True
    raise ShapeError(f"{what} expects rank {rank} or {rank + 1} input, got rank {x.ndim}")


def _out_dim(size, k, stride, padding):
    return (size + 2 * padding - k) // stride + 1


def _im2col(xp, kh, kw, stride, oh, ow):
    # (N, C, Hp, Wp) -> (N*oh*ow, C*kh*kw); one strided slice per kernel offset.
    n, c = xp.shape[:2]
    patches = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            patches[:, :, i, j] = xp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
    return patches.transpose(0, 4, 5, 1, 2, 3).reshape(n * oh * ow, c * kh * kw)


def _col2im(gcols, n, c, hp, wp, kh, kw, stride, oh, ow):
    patches = gcols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dxp = np.zeros((n, c, hp, wp), dtype=gcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += patches[:, :, i, j]
    return dxp


def conv2d_forward(layer: ConvLayer, x: np.ndarray):
    """Cross-correlate `x` with the layer kernels; zero padding, floor strides."""
    xb, batched = _as_batch(x, 3, "conv2d")
    n, c, h, w = xb.shape
    out_ch, in_ch, kh, kw = layer.kernels.shape
    if c != in_ch:
        raise ShapeError(f"input has {c} channels, layer expects {in_ch}")
    p, s = layer.padding, layer.stride
    if h + 2 * p < kh or w + 2 * p < kw:
        raise ShapeError(
            f"kernel {kh}x{kw} larger than padded input {h + 2 * p}x{w + 2 * p}")
    oh, ow = _out_dim(h, kh, s, p), _out_dim(w, kw, s, p)
    xp = np.pad(xb, ((0, 0), (0, 0), (p, p), (p, p))) if p else xb
    cols = _im2col(xp, kh, kw, s, oh, ow)
    w2 = layer.kernels.reshape(out_ch, -1)
    out = cols @ w2.T + layer.bias
    out = out.reshape(n, oh, ow, out_ch).transpose(0, 3, 1, 2)
    cache = ConvCache(cols=cols, input_shape=xb.shape, out_hw=(oh, ow), batched=batched)
    return (out if batched else out[0]), cache


def conv2d_backward(layer: ConvLayer, cache: ConvCache, grad_out: np.ndarray):
    """Gradients of conv2d_forward w.r.t. input, kernels, and bias."""
    gb, batched = _as_batch(grad_out, 3, "conv2d grad")
    n, c, h, w = cache.input_shape
    out_ch, in_ch, kh, kw = layer.kernels.shape
    oh, ow = cache.out_hw
    if batched != cache.batched or gb.shape != (n, out_ch, oh, ow):
        raise ShapeError(
            f"grad shape {grad_out.shape} does not match forward output "
            f"{(n, out_ch, oh, ow) if cache.batched else (out_ch, oh, ow)}")
    g2 = gb.transpose(0, 2, 3, 1).reshape(-1, out_ch)
    grad_kernels = (g2.T @ cache.cols).reshape(layer.kernels.shape)
    grad_bias = g2.sum(axis=0)
    gcols = g2 @ layer.kernels.reshape(out_ch, -1)
    p, s = layer.padding, layer.stride
    dxp = _col2im(gcols, n, c, h + 2 * p, w + 2 * p, kh, kw, s, oh, ow)
    dx = dxp[:, :, p:p + h, p:p + w] if p else dxp
    return (dx if batched else dx[0]), grad_kernels, grad_bias


def maxpool_forward(x: np.ndarray, window: int, stride: int):
    """Max over window x window patches; ties keep the first position in
    row-major scan order."""
    if window < 1 or stride < 1:
        raise ShapeError(f"window and stride must be >= 1, got {window}, {stride}")
    xb, batched = _as_batch(x, 3, "maxpool")
    n, c, h, w = xb.shape
    if h < window or w < window:
        raise ShapeError(f"window {window} larger than input {h}x{w}")
    oh, ow = _out_dim(h, window, stride, 0), _out_dim(w, window, stride, 0)
    patches = np.empty((n, c, oh, ow, window * window), dtype=xb.dtype)
    k = 0
    for i in range(window):
        for j in range(window):
            patches[..., k] = xb[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
            k += 1
    argmax = patches.argmax(axis=-1)
    out = np.take_along_axis(patches, argmax[..., None], axis=-1)[..., 0]
    cache = PoolCache(argmax=argmax, input_shape=xb.shape, window=window,
                      stride=stride, batched=batched)
    return (out if batched else out[0]), cache


def maxpool_backward(cache: PoolCache, grad_out: np.ndarray):
    """Route each gradient element to its recorded argmax position."""
    gb, batched = _as_batch(grad_out, 3, "maxpool grad")
    n, c, h, w = cache.input_shape
    oh, ow = cache.argmax.shape[2:]
    if batched != cache.batched or gb.shape != cache.argmax.shape:
        raise ShapeError(f"grad shape {grad_out.shape} does not match pooled output")
    win, s = cache.window, cache.stride
    nn, cc, ii, jj = np.ogrid[:n, :c, :oh, :ow]
    rows = ii * s + cache.argmax // win
    cols = jj * s + cache.argmax % win
    dx = np.zeros((n, c, h, w), dtype=gb.dtype)
    if s >= win:
        # windows are disjoint, every input cell receives at most one value
        dx[nn, cc, rows, cols] = gb
    else:
        np.add.at(dx, (np.broadcast_to(nn, gb.shape), np.broadcast_to(cc, gb.shape),
                       rows, cols), gb)
    return dx if batched else dx[0]


def relu(x: np.ndarray):
    """Elementwise max(0, x)."""
    cache = ReluCache(mask=x > 0)
    return np.maximum(x, 0), cache


def relu_backward(cache: ReluCache, grad_out: np.ndarray):
    if grad_out.shape != cache.mask.shape:
        raise ShapeError(f"grad shape {grad_out.shape} does not match input {cache.mask.shape}")
    return grad_out * cache.mask


def flatten(x: np.ndarray):
    """Row-major flatten to rank-1; a rank-4 batch keeps its leading axis."""
    batched = x.ndim == 4
    out = x.reshape(x.shape[0], -1) if batched else x.reshape(-1)
    return out, FlattenCache(input_shape=x.shape, batched=batched)


def flatten_backward(cache: FlattenCache, grad_out: np.ndarray):
    """Inverse reshape of flatten."""
    try:
        return grad_out.reshape(cache.input_shape)
    except ValueError:
        raise ShapeError(f"grad size {grad_out.size} does not match input "
                         f"{cache.input_shape}") from None


def dense_forward(layer: DenseLayer, x: np.ndarray):
    """y = W x + b for a rank-1 input, row-wise for a rank-2 batch."""
    out_n, in_n = layer.weights.shape
    if x.ndim == 1:
        if x.shape[0] != in_n:
            raise ShapeError(f"input length {x.shape[0]}, layer expects {in_n}")
        return layer.weights @ x + layer.bias, DenseCache(x=x, batched=False)
    if x.ndim == 2:
        if x.shape[1] != in_n:
            raise ShapeError(f"input width {x.shape[1]}, layer expects {in_n}")
        return x @ layer.weights.T + layer.bias, DenseCache(x=x, batched=True)
    raise ShapeError(f"dense expects rank 1 or 2 input, got rank {x.ndim}")


def dense_backward(layer: DenseLayer, cache: DenseCache, grad_out: np.ndarray):
    """Returns (grad_input, grad_weights, grad_bias)."""
    out_n = layer.weights.shape[0]
    if cache.batched:
        if grad_out.ndim != 2 or grad_out.shape != (cache.x.shape[0], out_n):
            raise ShapeError(f"grad shape {grad_out.shape} does not match output")
        grad_w = grad_out.T @ cache.x
        grad_b = grad_out.sum(axis=0)
        grad_x = grad_out @ layer.weights
    else:
        if grad_out.shape != (out_n,):
            raise ShapeError(f"grad shape {grad_out.shape} does not match output ({out_n},)")
        grad_w = np.outer(grad_out, cache.x)
        grad_b = grad_out.copy()
        grad_x = layer.weights.T @ grad_out
    return grad_x, grad_w, grad_b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    if logits.size == 0:
        raise ShapeError("softmax of an empty tensor")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)
