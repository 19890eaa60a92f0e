"""Compact two-stage CNN over rendered trajectories.

Layout is channels-last throughout: images (B, S, S), feature maps
(B, H, W, C), conv weights (F, C, 3, 3).  Convolutions are "valid"
cross-correlations with stride 1, each followed by ReLU and a 2x2 max-pool.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import ContractError
from ._fastmath import JIT

K = 3  # kernel size


@dataclass(frozen=True)
class CnnShape:
    image_size: int = 64
    conv1_filters: int = 8
    conv2_filters: int = 16
    num_classes: int = 10

    @property
    def flat_size(self) -> int:
        s = (self.image_size - K + 1) // 2
        s = (s - K + 1) // 2
        return s * s * self.conv2_filters

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            "conv1.W": (self.conv1_filters, 1, K, K),
            "conv1.b": (self.conv1_filters,),
            "conv2.W": (self.conv2_filters, self.conv1_filters, K, K),
            "conv2.b": (self.conv2_filters,),
            "dense.W": (self.num_classes, self.flat_size),
            "dense.b": (self.num_classes,),
        }

    def to_dict(self) -> dict:
        return {
            "image_size": self.image_size,
            "conv1_filters": self.conv1_filters,
            "conv2_filters": self.conv2_filters,
            "num_classes": self.num_classes,
        }


def init_params(shape: CnnShape, rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    for name, shp in shape.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shp)
        else:
            fan_in = int(np.prod(shp[1:]))
            s = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-s, s, shp)
    return params


@numba.njit(**JIT)
def _im2col(x, cols):
    B, H, W, C = x.shape
    Ho, Wo = H - 2, W - 2
    row = 0
    for b in range(B):
        for i in range(Ho):
            for j in range(Wo):
                col = 0
                for c in range(C):
                    for ki in range(3):
                        for kj in range(3):
                            cols[row, col] = x[b, i + ki, j + kj, c]
                            col += 1
                row += 1


@numba.njit(**JIT)
def _col2im(dcols, dx):
    B, H, W, C = dx.shape
    Ho, Wo = H - 2, W - 2
    dx[:] = 0.0
    row = 0
    for b in range(B):
        for i in range(Ho):
            for j in range(Wo):
                col = 0
                for c in range(C):
                    for ki in range(3):
                        for kj in range(3):
                            dx[b, i + ki, j + kj, c] += dcols[row, col]
                            col += 1
                row += 1


@numba.njit(**JIT)
def _relu_pool(a, out, idx):
    """out = maxpool2x2(relu(a)); idx holds the winning offset (first max wins)."""
    B, H2, W2, C = out.shape
    for b in range(B):
        for i in range(H2):
            for j in range(W2):
                for c in range(C):
                    best = max(a[b, 2 * i, 2 * j, c], 0.0)
                    k = 0
                    v = max(a[b, 2 * i, 2 * j + 1, c], 0.0)
                    if v > best:
                        best = v
                        k = 1
                    v = max(a[b, 2 * i + 1, 2 * j, c], 0.0)
                    if v > best:
                        best = v
                        k = 2
                    v = max(a[b, 2 * i + 1, 2 * j + 1, c], 0.0)
                    if v > best:
                        best = v
                        k = 3
                    out[b, i, j, c] = best
                    idx[b, i, j, c] = k


@numba.njit(**JIT)
def _relu_pool_backward(dout, idx, a, da):
    B, H2, W2, C = dout.shape
    da[:] = 0.0
    for b in range(B):
        for i in range(H2):
            for j in range(W2):
                for c in range(C):
                    k = idx[b, i, j, c]
                    ii = 2 * i + k // 2
                    jj = 2 * j + k % 2
                    if a[b, ii, jj, c] > 0.0:
                        da[b, ii, jj, c] = dout[b, i, j, c]


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x (B, H, W, C) -> (B, H-2, W-2, F); also returns the im2col matrix."""
    B, H, W, C = x.shape
    F = w.shape[0]
    Ho, Wo = H - K + 1, W - K + 1
    cols = np.empty((B * Ho * Wo, C * K * K))
    _im2col(np.ascontiguousarray(x), cols)
    out = cols @ w.reshape(F, C * K * K).T
    out += b
    return out.reshape(B, Ho, Wo, F), cols


def conv_backward(dout: np.ndarray, cols: np.ndarray, w: np.ndarray, in_shape, need_input_grad: bool):
    B, Ho, Wo, F = dout.shape
    C = w.shape[1]
    d2 = dout.reshape(B * Ho * Wo, F)
    dw = (d2.T @ cols).reshape(w.shape)
    db = d2.sum(axis=0)
    if not need_input_grad:
        return dw, db, None
    dcols = d2 @ w.reshape(F, C * K * K)
    dx = np.empty(in_shape)
    _col2im(dcols, dx)
    return dw, db, dx


def relu_pool_forward(a: np.ndarray):
    """ReLU then 2x2 max-pool (odd trailing row/column dropped)."""
    B, H, W, C = a.shape
    out = np.empty((B, H // 2, W // 2, C))
    idx = np.empty((B, H // 2, W // 2, C), dtype=np.int8)
    _relu_pool(a, out, idx)
    return out, idx


def relu_pool_backward(dout: np.ndarray, idx: np.ndarray, a: np.ndarray) -> np.ndarray:
    da = np.empty_like(a)
    _relu_pool_backward(np.ascontiguousarray(dout), idx, a, da)
    return da


def forward(params: dict, images: np.ndarray, shape: CnnShape, keep: bool = False):
    """Logits (B, classes); with ``keep`` also the cache needed by ``backward``."""
    x = np.asarray(images, dtype=float)
    if x.ndim == 2:
        x = x[None]
    if x.shape[1:] != (shape.image_size, shape.image_size):
        raise ContractError(f"expected {shape.image_size}x{shape.image_size} images, got {x.shape[1:]}")
    x = x[..., None]
    a1, cols1 = conv_forward(x, params["conv1.W"], params["conv1.b"])
    p1, idx1 = relu_pool_forward(a1)
    a2, cols2 = conv_forward(p1, params["conv2.W"], params["conv2.b"])
    p2, idx2 = relu_pool_forward(a2)
    flat = p2.reshape(len(x), -1)
    logits = flat @ params["dense.W"].T + params["dense.b"]
    if not keep:
        return logits
    cache = dict(x=x, a1=a1, cols1=cols1, idx1=idx1, p1=p1, a2=a2, cols2=cols2, idx2=idx2, p2=p2, flat=flat)
    return logits, cache


def backward(params: dict, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    grads = {}
    grads["dense.W"] = dlogits.T @ cache["flat"]
    grads["dense.b"] = dlogits.sum(axis=0)
    dp2 = (dlogits @ params["dense.W"]).reshape(cache["p2"].shape)
    da2 = relu_pool_backward(dp2, cache["idx2"], cache["a2"])
    grads["conv2.W"], grads["conv2.b"], dp1 = conv_backward(
        da2, cache["cols2"], params["conv2.W"], cache["p1"].shape, True
    )
    da1 = relu_pool_backward(dp1, cache["idx1"], cache["a1"])
    grads["conv1.W"], grads["conv1.b"], _ = conv_backward(
        da1, cache["cols1"], params["conv1.W"], cache["x"].shape, False
    )
    return grads
