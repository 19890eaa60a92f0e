"""Classifier networks behind one small interface.

Each network exposes ``param_shapes``, ``init_params``, ``logits`` and
``loss_and_grads``.  Parameters are plain dicts of float64 arrays keyed by
dotted names, so they pack straight into a :class:`ParamSet`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DomainError
from ..ranking import RankedPrediction
from . import cnn
from .core import cross_entropy, softmax
from .gru import GATE_NAMES, GruLayerParams, GruWorkspace, gru_sequence_backward, gru_sequence_forward

NUM_CLASSES = 10


def _layer(params: dict, prefix: str) -> GruLayerParams:
    return GruLayerParams.from_dict(params, prefix)


class BgruNet:
    """Bidirectional GRU: final forward and backward states -> dense -> softmax."""

    kind_prefixes = ("fwd.", "bwd.")

    def __init__(self, input_size: int, hidden_size: int = 32, num_classes: int = NUM_CLASSES, candidate: str = "tanh"):
        if candidate not in ("tanh", "sigmoid"):
            raise ContractError(f"unknown candidate activation {candidate!r}")
        self.input_size = int(input_size)
        self.hidden_size = int(hidden_size)
        self.num_classes = int(num_classes)
        self.candidate = candidate
        self._ws: dict[tuple, tuple[GruWorkspace, GruWorkspace]] = {}

    def config(self) -> dict:
        return dict(
            input_size=self.input_size,
            hidden_size=self.hidden_size,
            num_classes=self.num_classes,
            candidate=self.candidate,
        )

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        I, H = self.input_size, self.hidden_size
        shapes = {}
        for prefix in self.kind_prefixes:
            for g in GATE_NAMES:
                if g.startswith("W"):
                    shapes[prefix + g] = (H, I)
                elif g.startswith("U"):
                    shapes[prefix + g] = (H, H)
                else:
                    shapes[prefix + g] = (H,)
        shapes["out.W"] = (self.num_classes, 2 * H)
        shapes["out.b"] = (self.num_classes,)
        return shapes

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        params = {}
        for prefix in self.kind_prefixes:
            params.update(GruLayerParams.init(self.input_size, self.hidden_size, rng).to_dict(prefix))
        s = 1.0 / np.sqrt(2 * self.hidden_size)
        params["out.W"] = rng.uniform(-s, s, (self.num_classes, 2 * self.hidden_size))
        params["out.b"] = np.zeros(self.num_classes)
        return params

    def _workspaces(self, T: int, B: int):
        key = (T, B)
        if key not in self._ws:
            H = self.hidden_size
            self._ws[key] = (GruWorkspace(T, B, H), GruWorkspace(T, B, H))
        return self._ws[key]

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[None]
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ContractError(f"expected (B, T, {self.input_size}) input, got {x.shape}")
        return x

    def forward(self, params: dict, x, keep: bool = False):
        x = self._check(x)
        B, T, _ = x.shape
        ws_f, ws_b = self._workspaces(T, B) if keep else (None, None)
        seq = np.ascontiguousarray(x.transpose(1, 0, 2))
        tf = gru_sequence_forward(_layer(params, "fwd."), seq, self.candidate, ws_f)
        tb = gru_sequence_forward(_layer(params, "bwd."), seq[::-1], self.candidate, ws_b)
        feat = np.concatenate([tf.final, tb.final], axis=1)
        logits = feat @ params["out.W"].T + params["out.b"]
        if keep:
            return logits, (tf, tb, feat)
        return logits

    def logits(self, params: dict, x) -> np.ndarray:
        return self.forward(params, x)

    def backward(self, params: dict, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        tf, tb, feat = cache
        H = self.hidden_size
        grads = {"out.W": dlogits.T @ feat, "out.b": dlogits.sum(axis=0)}
        dfeat = dlogits @ params["out.W"]
        grads.update(gru_sequence_backward(tf, dfeat[:, :H]).to_dict("fwd."))
        grads.update(gru_sequence_backward(tb, dfeat[:, H:]).to_dict("bwd."))
        return grads

    def loss_and_grads(self, params: dict, x, y) -> tuple[float, dict]:
        logits, cache = self.forward(params, x, keep=True)
        loss, dlogits = _softmax_ce(logits, y)
        return loss, self.backward(params, cache, dlogits)


class CnnNet:
    """Two conv/pool stages and a dense softmax head over square images."""

    def __init__(self, image_size: int = 64, conv1_filters: int = 8, conv2_filters: int = 16, num_classes: int = NUM_CLASSES):
        self.shape = cnn.CnnShape(image_size, conv1_filters, conv2_filters, num_classes)
        if self.shape.flat_size <= 0:
            raise ContractError(f"image size {image_size} is too small for two conv/pool stages")
        self.num_classes = num_classes

    def config(self) -> dict:
        return self.shape.to_dict()

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return self.shape.param_shapes()

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return cnn.init_params(self.shape, rng)

    def forward(self, params: dict, x, keep: bool = False):
        return cnn.forward(params, x, self.shape, keep)

    def logits(self, params: dict, x) -> np.ndarray:
        return cnn.forward(params, x, self.shape)

    def backward(self, params: dict, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        return cnn.backward(params, cache, dlogits)

    def loss_and_grads(self, params: dict, x, y) -> tuple[float, dict]:
        logits, cache = cnn.forward(params, x, self.shape, keep=True)
        loss, dlogits = _softmax_ce(logits, y)
        return loss, cnn.backward(params, cache, dlogits)


def _softmax_ce(logits: np.ndarray, y) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits."""
    y = np.asarray(y)
    probs = softmax(logits)
    loss = cross_entropy(probs, y)
    d = probs.copy()
    d[np.arange(len(y)), y] -= 1.0
    d /= len(y)
    return loss, d


def build_network(kind: str, config: dict):
    if kind in ("gru1", "gru2"):
        return BgruNet(**config)
    if kind == "cnn":
        return CnnNet(**config)
    raise ContractError(f"unknown model kind {kind!r}")


@dataclass
class BgruClassifier:
    """Explicit view of a bidirectional GRU's weights."""

    forward: GruLayerParams
    backward: GruLayerParams
    out_W: np.ndarray
    out_b: np.ndarray
    candidate: str = "tanh"

    def __post_init__(self):
        H = self.forward.hidden_size
        if self.out_W.shape != (NUM_CLASSES, 2 * H) or self.out_b.shape != (NUM_CLASSES,):
            raise ContractError(f"output layer must be {NUM_CLASSES} x {2 * H} plus {NUM_CLASSES} biases")

    def to_params(self) -> dict[str, np.ndarray]:
        d = self.forward.to_dict("fwd.")
        d.update(self.backward.to_dict("bwd."))
        d["out.W"] = self.out_W
        d["out.b"] = self.out_b
        return d

    @classmethod
    def from_params(cls, params: dict, candidate: str = "tanh") -> "BgruClassifier":
        return cls(_layer(params, "fwd."), _layer(params, "bwd."), params["out.W"], params["out.b"], candidate)

    def network(self) -> BgruNet:
        return BgruNet(self.forward.input_size, self.forward.hidden_size, NUM_CLASSES, self.candidate)


def bgru_forward(model: BgruClassifier, sequence) -> RankedPrediction:
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim == 1:
        seq = seq[:, None]
    if len(seq) == 0:
        raise DomainError("empty sequence")
    logits = model.network().logits(model.to_params(), seq[None])
    return RankedPrediction.from_scores(softmax(logits)[0])


def cnn_forward(params: dict, image) -> RankedPrediction:
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ContractError(f"expected a square grayscale image, got shape {img.shape}")
    net = CnnNet(img.shape[0], params["conv1.b"].shape[0], params["conv2.b"].shape[0], params["dense.b"].shape[0])
    if net.shape.flat_size != params["dense.W"].shape[1]:
        raise ContractError(f"image shape {img.shape} does not match the network input")
    return RankedPrediction.from_scores(softmax(net.logits(params, img[None]))[0])
