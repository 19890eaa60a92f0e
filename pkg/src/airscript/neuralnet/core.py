"""Softmax/cross-entropy, flat parameter storage and the Adam optimizer."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ContractError

PROB_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, labels) -> float:
    """Mean of -log p[label] with probabilities floored at 1e-12."""
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    y = np.atleast_1d(np.asarray(labels))
    if len(y) != len(p):
        raise ContractError("one label per prediction required")
    if np.any((y < 0) | (y >= p.shape[1])) or not np.issubdtype(y.dtype, np.integer):
        raise ContractError(f"labels must be integers in 0..{p.shape[1] - 1}")
    picked = p[np.arange(len(y)), y]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


class ParamSet:
    """Named tensors stored as views into one contiguous float64 vector."""

    def __init__(self, shapes: dict[str, tuple[int, ...]], flat: np.ndarray | None = None):
        self.shapes = {k: tuple(int(d) for d in v) for k, v in shapes.items()}
        sizes = [int(np.prod(s)) for s in self.shapes.values()]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        total = int(self.offsets[-1])
        if flat is None:
            flat = np.zeros(total)
        if flat.shape != (total,):
            raise ContractError(f"flat parameter vector must have {total} entries, got {flat.shape}")
        self.flat = flat
        self.views = {
            name: flat[self.offsets[i] : self.offsets[i + 1]].reshape(shape)
            for i, (name, shape) in enumerate(self.shapes.items())
        }

    def __getitem__(self, name: str) -> np.ndarray:
        return self.views[name]

    def __iter__(self):
        return iter(self.views)

    def names(self) -> list[str]:
        return list(self.shapes)

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(self.views)

    def pack(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        out = np.empty_like(self.flat)
        for i, name in enumerate(self.shapes):
            out[self.offsets[i] : self.offsets[i + 1]] = np.asarray(grads[name]).ravel()
        return out

    def unpack(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        return {
            name: flat[self.offsets[i] : self.offsets[i + 1]].reshape(shape)
            for i, (name, shape) in enumerate(self.shapes.items())
        }

    def copy(self) -> "ParamSet":
        return ParamSet(self.shapes, self.flat.copy())


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    decay: float = 1e-6
    epochs: int = 150
    batch_size: int = 16

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ContractError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ContractError("betas must lie in (0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ContractError("epochs must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


class AdamState:
    def __init__(self, size: int):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.step = 0


def adam_step(theta: np.ndarray, grad: np.ndarray, state: AdamState, config: AdamConfig) -> None:
    """One in-place Adam update with bias correction and time-based decay."""
    lr = config.learning_rate / (1.0 + config.decay * state.step)
    state.step += 1
    t = state.step
    state.m *= config.beta1
    state.m += (1.0 - config.beta1) * grad
    state.v *= config.beta2
    state.v += (1.0 - config.beta2) * grad * grad
    m_hat = state.m / (1.0 - config.beta1**t)
    v_hat = state.v / (1.0 - config.beta2**t)
    theta -= lr * m_hat / (np.sqrt(v_hat) + config.epsilon)
