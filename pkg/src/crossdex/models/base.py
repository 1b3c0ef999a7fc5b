from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import ClassVar

import numpy as np

from ..numcore import Adam, Tensor, parameter
from ..numcore import tensor as ops
from ..windowing import denormalize_rows, normalize_rows, scale_rows

KINDS = (
    "AR", "MLP_LINEAR", "MLP_RELU", "MLP_LOGISTIC", "MLP_TANH",
    "LSTM_VEC", "LSTM_VAL", "GRU_VEC", "GRU_VAL",
    "CNN_SEQ", "SCNN", "RBF", "KGATE", "GMDH",
)
# models run on raw index points; everything else gets strict min-max scaling
RAW_INPUT_KINDS = frozenset({"AR", "MLP_LINEAR", "MLP_RELU", "KGATE", "CNN_SEQ", "SCNN"})

VAL_CONTEXTS = ("session", "sliding")


class ForecasterError(RuntimeError):
    pass


class NotTrainedError(ForecasterError):
    pass


class TrainingError(ForecasterError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class NumericError(ForecasterError):
    pass


@dataclass(frozen=True)
class ForecasterSpec:
    kind: str
    input_len: int = 30
    output_len: int = 30
    normalize: bool | None = None
    seed: int = 0
    epochs: int = 1000
    lr: float = 0.01
    batch_size: int = 32
    hidden: int | None = None  # recurrent state size; None -> 2*input_len+1
    gmdh_survivors: int = 30
    gmdh_max_layers: int = 5
    gmdh_tol: float = 1e-6
    val_context: str = "session"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.normalize is None:
            object.__setattr__(self, "normalize", self.kind not in RAW_INPUT_KINDS)
        if self.input_len < 1 or self.output_len < 1:
            raise ValueError("input_len and output_len must be >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.val_context not in VAL_CONTEXTS:
            raise ValueError(f"val_context must be one of {VAL_CONTEXTS}")

    def with_seed(self, seed: int) -> "ForecasterSpec":
        return replace(self, seed=seed)

    @classmethod
    def from_dict(cls, d: dict) -> "ForecasterSpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown model fields: {', '.join(sorted(extra))}")
        return cls(**d)


@dataclass(frozen=True)
class LayerSizing:
    hidden1: int
    hidden2: int

    @classmethod
    def for_input(cls, m: int) -> "LayerSizing":
        return cls(m, 2 * m + 1)

    def __post_init__(self):
        if self.hidden2 != 2 * self.hidden1 + 1:
            raise ValueError("second hidden layer must hold 2*m+1 units")


@dataclass(frozen=True)
class TrainingSet:
    """Observations of one training session.

    ``context`` is the raw session trace, used by sequence-to-value models.
    """

    inputs: np.ndarray
    labels: np.ndarray
    context: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", np.atleast_2d(np.asarray(self.inputs, dtype=np.float64)))
        object.__setattr__(self, "labels", np.atleast_2d(np.asarray(self.labels, dtype=np.float64)))
        if self.context is not None:
            object.__setattr__(self, "context", np.asarray(self.context, dtype=np.float64))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @classmethod
    def from_observations(cls, obs, context=None) -> "TrainingSet":
        if not obs:
            raise TrainingError("training session holds no observations")
        return cls(np.stack([o.input for o in obs]), np.stack([o.label for o in obs]), context)


def init_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Forecaster:
    """Shared contract: ``reset`` -> ``fit`` -> ``predict``."""

    kind: ClassVar[str] = ""

    def __init__(self, spec: ForecasterSpec):
        self.spec = spec
        self.reset()

    def reset(self) -> None:
        self.rng = np.random.default_rng(self.spec.seed)
        self.trained = False
        self.params: dict[str, Tensor] = {}
        self.extra: dict = {}
        self.loss_history: list[float] = []
        self._init_params()

    def _init_params(self) -> None:
        raise NotImplementedError

    def _check(self, data: TrainingSet) -> None:
        if len(data) == 0:
            raise TrainingError("training session holds no observations")
        if data.inputs.shape[1] != self.spec.input_len or data.labels.shape[1] != self.spec.output_len:
            raise TrainingError(
                f"observations are {data.inputs.shape[1]}->{data.labels.shape[1]} days, "
                f"model expects {self.spec.input_len}->{self.spec.output_len}"
            )

    def fit(self, data: TrainingSet) -> "Forecaster":
        raise NotImplementedError

    def predict_many(self, X) -> np.ndarray:
        if not self.trained:
            raise NotTrainedError(f"{self.spec.kind} must be trained before predicting")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.spec.input_len:
            raise ValueError(f"input window has {X.shape[1]} days, expected {self.spec.input_len}")
        if self.spec.normalize:
            Xn, lo, hi = normalize_rows(X)
            out = denormalize_rows(self._predict_scaled(Xn), lo, hi)
        else:
            out = self._predict_scaled(X)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"{self.spec.kind} produced a non-finite forecast")
        return out

    def predict(self, window) -> np.ndarray:
        return self.predict_many(np.asarray(window, dtype=np.float64)[None, :])[0]

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _scaled(self, data: TrainingSet) -> tuple[np.ndarray, np.ndarray]:
        if not self.spec.normalize:
            return data.inputs, data.labels
        Xn, lo, hi = normalize_rows(data.inputs)
        return Xn, scale_rows(data.labels, lo, hi)

    def n_parameters(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    # serialization
    def to_dict(self) -> dict:
        return {
            "kind": self.spec.kind,
            "spec": asdict(self.spec),
            "trained": self.trained,
            "params": {k: {"shape": list(p.shape), "data": p.data.ravel().tolist()}
                       for k, p in self.params.items()},
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def load_state(self, d: dict) -> None:
        self.params = {k: parameter(np.array(v["data"], dtype=np.float64).reshape(v["shape"]), name=k)
                       for k, v in d["params"].items()}
        self.extra = d.get("extra", {})
        self.trained = bool(d["trained"])


class NeuralForecaster(Forecaster):
    """Networks trained by Adam on mean squared error in (optionally) scaled space."""

    def forward(self, X: Tensor, params: dict[str, Tensor]) -> Tensor:
        raise NotImplementedError

    def _before_training(self, X: np.ndarray, Y: np.ndarray) -> None:
        """Hook for data-dependent initialisation (e.g. RBF centres)."""

    def loss(self, X: np.ndarray, Y: np.ndarray, params: dict[str, Tensor] | None = None) -> Tensor:
        params = self.params if params is None else params
        return ops.mse(self.forward(Tensor(X), params), Tensor(Y))

    def fit(self, data: TrainingSet) -> "NeuralForecaster":
        self._check(data)
        X, Y = self._scaled(data)
        self._before_training(X, Y)
        self._adam_loop(X, Y)
        self.trained = True
        return self

    def _adam_loop(self, X: np.ndarray, Y: np.ndarray) -> None:
        spec = self.spec
        opt = Adam(list(self.params.values()), lr=spec.lr)
        n = X.shape[0]
        for epoch in range(1, spec.epochs + 1):
            if n <= spec.batch_size:
                batches = [slice(None)]
            else:
                perm = self.rng.permutation(n)
                batches = [perm[i:i + spec.batch_size] for i in range(0, n, spec.batch_size)]
            for idx in batches:
                opt.zero_grad()
                loss = self.loss(X[idx], Y[idx])
                value = loss.item()
                if not np.isfinite(value):
                    raise DivergenceError(epoch, value)
                loss.backward()
                opt.step()
            self.loss_history.append(value)

    def detached(self) -> dict[str, Tensor]:
        return {k: Tensor(p.data) for k, p in self.params.items()}

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        return self.forward(Tensor(X), self.detached()).data
