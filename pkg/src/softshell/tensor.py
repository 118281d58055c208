"""Dense tensor primitives.

Tensors are plain numpy arrays (row-major, float64 in tests, float32 allowed
on training paths). These helpers pin down the few contracts the rest of the
package relies on: validated creation, seeded He initialization, and the
deterministic argmax tie rule.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError, ShapeError
from .rng import Rng

Tensor = np.ndarray


def _check_shape(shape) -> tuple[int, ...]:
    dims = tuple(shape)
    if len(dims) == 0:
        raise ShapeError("shape must have at least one dimension")
    for d in dims:
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise ShapeError(f"invalid dimension {d!r}: all dimensions must be integers >= 1")
    return dims


def tensor_create(shape, fill=0.0, dtype=np.float64) -> Tensor:
    """New tensor of `shape` with every element equal to `fill`.

    `fill` may be the string "zeros" as a synonym for 0.0.
    """
    dims = _check_shape(shape)
    if isinstance(fill, str):
        if fill != "zeros":
            raise ParameterError(f"unknown fill {fill!r}")
        fill = 0.0
    return np.full(dims, float(fill), dtype=dtype)


def tensor_random_init(shape, fan_in: int, rng: Rng, dtype=np.float64) -> Tensor:
    """He-initialized tensor: i.i.d. Normal(0, 2/fan_in) from `rng`."""
    dims = _check_shape(shape)
    if fan_in < 1:
        raise ParameterError(f"fan_in must be >= 1, got {fan_in}")
    n = int(np.prod(dims))
    std = math.sqrt(2.0 / fan_in)
    return (rng.normals(n) * std).reshape(dims).astype(dtype, copy=False)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two rank-2 tensors."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got ranks {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def reduce_argmax(t: Tensor) -> int:
    """Index of the maximum element of a rank-1 tensor, lowest index on ties."""
    if t.ndim != 1:
        raise ShapeError(f"reduce_argmax needs a rank-1 tensor, got rank {t.ndim}")
    if t.size == 0:
        raise ShapeError("reduce_argmax of an empty tensor")
    return int(np.argmax(t))
