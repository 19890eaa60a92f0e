"""Featurization, seeded mini-batch training and ranked inference."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..difviz import DifVizConfig, trajectory
from ..errors import ContractError, DomainError, TrainingDiverged
from ..pipeline import ScalerStats, fit_scaler, preprocess_difviz, preprocess_imu
from ..ranking import RankedPrediction
from ..render import render_raster
from .checkpoint import KINDS, Checkpoint
from .core import AdamConfig, AdamState, ParamSet, adam_step, softmax
from .models import build_network

log = logging.getLogger(__name__)

GRU_LEARNING_RATE = 1e-3
CNN_LEARNING_RATE = 1e-4


def default_adam(kind: str, epochs: int = 150, batch_size: int = 16) -> AdamConfig:
    """Adam settings per model kind; the CNN runs without learning-rate decay."""
    if kind == "cnn":
        return AdamConfig(learning_rate=CNN_LEARNING_RATE, decay=0.0, epochs=epochs, batch_size=batch_size)
    if kind in ("gru1", "gru2"):
        return AdamConfig(learning_rate=GRU_LEARNING_RATE, decay=1e-6, epochs=epochs, batch_size=batch_size)
    raise ContractError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class ModelConfig:
    hidden_size: int = 32
    candidate: str = "tanh"  # "sigmoid" gives the literal reading of the 32 sigmoid units
    difviz: DifVizConfig = field(default_factory=DifVizConfig)
    raster_size: int = 64
    line_width: float = 2.0
    fill: float = 0.8

    def to_dict(self) -> dict:
        d = asdict(self)
        d["difviz"] = self.difviz.to_dict()
        return d


def _network_config(kind: str, model: ModelConfig) -> dict:
    if kind == "gru1":
        return dict(input_size=2, hidden_size=model.hidden_size, candidate=model.candidate)
    if kind == "gru2":
        return dict(input_size=10, hidden_size=model.hidden_size, candidate=model.candidate)
    return dict(image_size=model.raster_size)


def _preprocessing(kind: str, model: ModelConfig, scaler: ScalerStats | None) -> dict:
    if kind == "gru2":
        return {"scaler": scaler.to_dict()}
    prep = {"difviz": model.difviz.to_dict()}
    if kind == "cnn":
        prep["raster"] = {"size": model.raster_size, "line_width": model.line_width, "fill": model.fill}
    return prep


def featurize_one(kind: str, recording, preprocessing: dict) -> np.ndarray:
    """Model input for one recording; DomainError when it cannot be used."""
    if kind == "gru2":
        return preprocess_imu(recording, ScalerStats.from_dict(preprocessing["scaler"]))
    coords = trajectory(recording, DifVizConfig.from_dict(preprocessing["difviz"]))
    if kind == "gru1":
        return preprocess_difviz(coords)
    if kind == "cnn":
        r = preprocessing["raster"]
        return render_raster(coords, size=r["size"], line_width=r["line_width"], fill=r["fill"])
    raise ContractError(f"unknown model kind {kind!r}")


def featurize(kind: str, recordings, preprocessing: dict) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Stack model inputs; unusable recordings are skipped and reported by index."""
    feats, labels, skipped = [], [], []
    for i, rec in enumerate(recordings):
        try:
            feats.append(featurize_one(kind, rec, preprocessing))
            labels.append(rec.label)
        except DomainError as exc:
            log.warning("skipping recording %d (%s): %s", i, kind, exc)
            skipped.append(i)
    if not feats:
        return np.empty((0,)), np.empty(0, dtype=int), skipped
    return np.stack(feats), np.asarray(labels, dtype=int), skipped


def _fingerprint(recordings) -> str:
    h = hashlib.sha256()
    for r in recordings:
        h.update(r.digest().encode())
    return h.hexdigest()


def compute_gradients(net, params: dict, x, y) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its exact gradient per parameter."""
    return net.loss_and_grads(params, x, y)


def fit_arrays(net, x: np.ndarray, y: np.ndarray, adam: AdamConfig, seed: int, progress=None):
    """Train ``net`` on prepared arrays; returns (params dict, per-epoch losses)."""
    if len(x) == 0:
        raise DomainError("cannot train on an empty training set")
    rng = np.random.default_rng(seed)
    params = ParamSet(net.param_shapes())
    for name, value in net.init_params(rng).items():
        params[name][...] = value
    state = AdamState(params.flat.size)
    n = len(x)
    history = []
    for epoch in range(adam.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, adam.batch_size):
            idx = order[start : start + adam.batch_size]
            loss, grads = net.loss_and_grads(params.views, x[idx], y[idx])
            g = params.pack(grads)
            if not (np.isfinite(loss) and np.all(np.isfinite(g))):
                raise TrainingDiverged(
                    f"non-finite loss or gradient at epoch {epoch + 1}, batch starting {start} (loss={loss})"
                )
            adam_step(params.flat, g, state, adam)
            total += loss * len(idx)
        history.append(total / n)
        if progress is not None:
            progress(epoch + 1, history[-1])
    if not np.all(np.isfinite(params.flat)):
        raise TrainingDiverged("parameters became non-finite")
    return {k: v.copy() for k, v in params.views.items()}, history


def train(
    kind: str,
    recordings,
    adam: AdamConfig | None = None,
    model: ModelConfig = ModelConfig(),
    seed: int = 0,
    progress=None,
) -> Checkpoint:
    """Train one classifier kind on a set of labelled recordings.

    The returned checkpoint carries everything inference needs: the fitted
    scaler (gru2) or the 2-DifViz and raster settings (gru1, cnn).
    """
    if kind not in KINDS:
        raise ContractError(f"unknown model kind {kind!r}")
    recordings = list(recordings)
    if not recordings:
        raise DomainError("cannot train on an empty training set")
    adam = adam or default_adam(kind)
    scaler = fit_scaler(recordings) if kind == "gru2" else None
    prep = _preprocessing(kind, model, scaler)
    x, y, skipped = featurize(kind, recordings, prep)
    if skipped:
        log.warning("%d of %d training recordings were unusable for %s", len(skipped), len(recordings), kind)
    return train_on_features(kind, x, y, prep, adam, model, seed, _fingerprint(recordings), progress)


def preprocessing_for(kind: str, recordings, model: ModelConfig = ModelConfig()) -> dict:
    """Embedded preprocessing settings, fitting the scaler on ``recordings`` for gru2."""
    scaler = fit_scaler(recordings) if kind == "gru2" else None
    return _preprocessing(kind, model, scaler)


def train_on_features(
    kind: str,
    x: np.ndarray,
    y: np.ndarray,
    preprocessing: dict,
    adam: AdamConfig,
    model: ModelConfig = ModelConfig(),
    seed: int = 0,
    fingerprint: str = "",
    progress=None,
) -> Checkpoint:
    net = build_network(kind, _network_config(kind, model))
    params, history = fit_arrays(net, x, y, adam, seed, progress)
    return Checkpoint(
        kind=kind,
        network=net.config(),
        params=params,
        preprocessing=preprocessing,
        optimizer=adam.to_dict(),
        seed=int(seed),
        loss_history=history,
        train_fingerprint=fingerprint,
    )


def fingerprint(recordings) -> str:
    return _fingerprint(recordings)


def predict_proba(checkpoint: Checkpoint, features: np.ndarray) -> np.ndarray:
    net = checkpoint.network_model()
    return softmax(net.logits(checkpoint.params, features))


def predict_ranked(checkpoint: Checkpoint, recording) -> RankedPrediction:
    x = featurize_one(checkpoint.kind, recording, checkpoint.preprocessing)
    return RankedPrediction.from_scores(predict_proba(checkpoint, x[None])[0])


def predict_batch(checkpoint: Checkpoint, recordings, batch_size: int = 64) -> list[RankedPrediction | None]:
    """Rankings for many recordings; ``None`` where preprocessing rejected one."""
    recordings = list(recordings)
    out: list[RankedPrediction | None] = [None] * len(recordings)
    usable, feats = [], []
    for i, rec in enumerate(recordings):
        try:
            feats.append(featurize_one(checkpoint.kind, rec, checkpoint.preprocessing))
            usable.append(i)
        except DomainError:
            pass
    for start in range(0, len(feats), batch_size):
        probs = predict_proba(checkpoint, np.stack(feats[start : start + batch_size]))
        for i, p in zip(usable[start : start + batch_size], probs):
            out[i] = RankedPrediction.from_scores(p)
    return out


def accuracy(checkpoint: Checkpoint, recordings) -> float:
    preds = predict_batch(checkpoint, recordings)
    hits = [p is not None and p.top == r.label for p, r in zip(preds, recordings)]
    return float(np.mean(hits)) if hits else float("nan")
