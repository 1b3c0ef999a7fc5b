from __future__ import annotations

import numpy as np

from ..numcore import add_bias_column, parameter, solve_least_squares
from .base import Forecaster, TrainingSet


class LinearAR(Forecaster):
    """Multivariate auto-regression ``y = W [x; 1]`` solved in closed form."""

    kind = "AR"

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        self.params = {"W": parameter(np.zeros((m + 1, n)), name="W")}

    def fit(self, data: TrainingSet) -> "LinearAR":
        self._check(data)
        X, Y = self._scaled(data)
        W = solve_least_squares(add_bias_column(X), Y, fallback="min_norm")
        self.params["W"].data = W
        self.trained = True
        return self

    def set_weights(self, W: np.ndarray, bias: np.ndarray | None = None) -> None:
        """Install ``y = W x + bias`` directly (W shaped output x input)."""
        W = np.asarray(W, dtype=np.float64)
        b = np.zeros(W.shape[0]) if bias is None else np.asarray(bias, dtype=np.float64)
        self.params["W"].data = np.vstack([W.T, b[None, :]])
        self.trained = True

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        return add_bias_column(X) @ self.params["W"].data
