"""Forecaster zoo behind one reset/fit/predict contract."""
from __future__ import annotations

import json

from .ar import LinearAR
from .base import (
    KINDS,
    RAW_INPUT_KINDS,
    DivergenceError,
    Forecaster,
    ForecasterError,
    ForecasterSpec,
    LayerSizing,
    NeuralForecaster,
    NotTrainedError,
    NumericError,
    TrainingError,
    TrainingSet,
)
from .cnn import SequentialCNN, SpectralCNN
from .feedforward import KGateNet, LinearMLP, LogisticMLP, ReluMLP, RBFNet, TanhMLP
from .gmdh import GMDH
from .recurrent import GRUVal, GRUVec, LSTMVal, LSTMVec, RecurrentForecaster

REGISTRY: dict[str, type[Forecaster]] = {
    cls.kind: cls
    for cls in (LinearAR, LinearMLP, ReluMLP, LogisticMLP, TanhMLP, LSTMVec, LSTMVal,
                GRUVec, GRUVal, SequentialCNN, SpectralCNN, RBFNet, KGateNet, GMDH)
}
assert set(REGISTRY) == set(KINDS)

ANN_KINDS = tuple(k for k in KINDS if k != "AR")
_MLP_KINDS = {"none": "MLP_LINEAR", "relu": "MLP_RELU", "logistic": "MLP_LOGISTIC", "tanh": "MLP_TANH"}


def build(spec: ForecasterSpec | str, **overrides) -> Forecaster:
    if isinstance(spec, str):
        spec = ForecasterSpec(kind=spec, **overrides)
    return REGISTRY[spec.kind](spec)


def build_mlp(activation: str = "none", **kw) -> Forecaster:
    return build(_MLP_KINDS[activation], **kw)


def build_rbf(**kw) -> Forecaster:
    return build("RBF", **kw)


def build_kgate(**kw) -> Forecaster:
    return build("KGATE", **kw)


def build_gmdh(**kw) -> Forecaster:
    return build("GMDH", **kw)


def build_scnn(**kw) -> Forecaster:
    return build("SCNN", **kw)


def build_cnn_seq(**kw) -> Forecaster:
    return build("CNN_SEQ", **kw)


def build_recurrent(cell: str = "LSTM", mode: str = "VEC", **kw) -> Forecaster:
    return build(f"{cell.upper()}_{mode.upper()}", **kw)


def from_dict(d: dict) -> Forecaster:
    model = build(ForecasterSpec.from_dict(d["spec"]))
    model.load_state(d)
    return model


def from_json(text: str) -> Forecaster:
    return from_dict(json.loads(text))


__all__ = [
    "ANN_KINDS", "KINDS", "RAW_INPUT_KINDS", "REGISTRY",
    "DivergenceError", "Forecaster", "ForecasterError", "ForecasterSpec", "GMDH",
    "LayerSizing", "LinearAR", "NeuralForecaster", "NotTrainedError", "NumericError",
    "RecurrentForecaster", "TrainingError", "TrainingSet",
    "build", "build_cnn_seq", "build_gmdh", "build_kgate", "build_mlp", "build_rbf",
    "build_recurrent", "build_scnn", "from_dict", "from_json",
]
