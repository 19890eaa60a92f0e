"""Numpy/numba classifiers: a bidirectional GRU and a compact CNN."""
from .checkpoint import Checkpoint
from .core import AdamConfig, AdamState, ParamSet, adam_step, cross_entropy, softmax
from .gru import GruLayerParams, gru_cell_step, gru_sequence_backward, gru_sequence_forward
from .models import BgruClassifier, BgruNet, CnnNet, bgru_forward, build_network, cnn_forward
from .training import (
    ModelConfig,
    accuracy,
    compute_gradients,
    default_adam,
    featurize,
    featurize_one,
    fingerprint,
    fit_arrays,
    predict_batch,
    predict_proba,
    predict_ranked,
    preprocessing_for,
    train,
    train_on_features,
)
