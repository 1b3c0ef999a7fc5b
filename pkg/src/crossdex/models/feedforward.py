"""Two-hidden-layer networks sized m -> 2m+1: plain MLPs, RBF and KGate."""
from __future__ import annotations

import numpy as np

from ..numcore import Tensor, parameter
from ..numcore import tensor as ops
from .base import LayerSizing, NeuralForecaster, init_uniform

ACTIVATIONS = {
    "none": None,
    "relu": ops.relu,
    "logistic": ops.sigmoid,
    "tanh": ops.tanh,
}


def _dense(prefix: str, rng, fan_in: int, fan_out: int) -> dict:
    return {
        f"{prefix}.W": parameter(init_uniform(rng, (fan_in, fan_out), fan_in), name=f"{prefix}.W"),
        f"{prefix}.b": parameter(init_uniform(rng, (fan_out,), fan_in), name=f"{prefix}.b"),
    }


def _apply_dense(x: Tensor, params: dict, prefix: str) -> Tensor:
    return ops.add(ops.matmul(x, params[f"{prefix}.W"]), params[f"{prefix}.b"])


class MLP(NeuralForecaster):
    activation = "none"

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        size = LayerSizing.for_input(m)
        self.sizing = size
        self.params = {}
        self.params.update(_dense("h1", self.rng, m, size.hidden1))
        self.params.update(_dense("h2", self.rng, size.hidden1, size.hidden2))
        self.params.update(_dense("out", self.rng, size.hidden2, n))

    def forward(self, X: Tensor, params: dict) -> Tensor:
        act = ACTIVATIONS[self.activation]
        h = _apply_dense(X, params, "h1")
        if act is not None:
            h = act(h)
        h = _apply_dense(h, params, "h2")
        if act is not None:
            h = act(h)
        return _apply_dense(h, params, "out")


class LinearMLP(MLP):
    kind = "MLP_LINEAR"
    activation = "none"


class ReluMLP(MLP):
    kind = "MLP_RELU"
    activation = "relu"


class LogisticMLP(MLP):
    kind = "MLP_LOGISTIC"
    activation = "logistic"


class TanhMLP(MLP):
    kind = "MLP_TANH"
    activation = "tanh"


class RBFNet(NeuralForecaster):
    """Gaussian units ``a_k exp(-b_k ||x - c_k||^2)`` feeding a linear readout.

    Widths are stored as ``beta`` with ``b = softplus(beta)`` so they stay positive.
    """

    kind = "RBF"

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        units = LayerSizing.for_input(m).hidden2
        self.params = {
            "centers": parameter(self.rng.uniform(0.0, 1.0, size=(units, m)), name="centers"),
            "amp": parameter(np.ones(units), name="amp"),
            "beta": parameter(np.full(units, np.log(np.expm1(1.0))), name="beta"),
        }
        self.params.update(_dense("out", self.rng, units, n))

    def _before_training(self, X: np.ndarray, Y: np.ndarray) -> None:
        units = self.params["centers"].shape[0]
        n = X.shape[0]
        reps = -(-units // n)
        order = np.concatenate([self.rng.permutation(n) for _ in range(reps)])[:units]
        centers = X[order].copy()
        self.params["centers"].data = centers
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        typical = float(np.median(d2[d2 > 0])) if np.any(d2 > 0) else 1.0
        width = 1.0 / typical
        # inverse softplus
        self.params["beta"].data = np.full(units, width + np.log(-np.expm1(-width)))

    def unit_outputs(self, X: Tensor, params: dict) -> Tensor:
        diff = ops.sub(ops.reshape(X, (X.shape[0], 1, X.shape[1])), params["centers"])
        d2 = ops.sum(ops.square(diff), axis=2)
        b = ops.softplus(params["beta"])
        return ops.mul(params["amp"], ops.exp(ops.mul(-1.0, ops.mul(b, d2))))

    def forward(self, X: Tensor, params: dict) -> Tensor:
        return _apply_dense(self.unit_outputs(X, params), params, "out")


class KGateNet(NeuralForecaster):
    """Two stacked gate cells; every gate reads the network input ``x0``.

    ``z_i = (W_i x_i + tanh(W_ti x0) * (W_ai x0)) * sigmoid(W_si x0)``.
    """

    kind = "KGATE"

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        size = LayerSizing.for_input(m)
        self.params = {}
        for i, (fan_in, width) in enumerate([(m, size.hidden1), (size.hidden1, size.hidden2)], start=1):
            self.params.update(_dense(f"k{i}.trunk", self.rng, fan_in, width))
            for gate in ("t", "a", "s"):
                self.params.update(_dense(f"k{i}.{gate}", self.rng, m, width))
        self.params.update(_dense("out", self.rng, size.hidden2, n))

    @staticmethod
    def cell(x: Tensor, x0: Tensor, params: dict, prefix: str) -> Tensor:
        trunk = _apply_dense(x, params, f"{prefix}.trunk")
        shift = ops.mul(ops.tanh(_apply_dense(x0, params, f"{prefix}.t")), _apply_dense(x0, params, f"{prefix}.a"))
        gate = ops.sigmoid(_apply_dense(x0, params, f"{prefix}.s"))
        return ops.mul(ops.add(trunk, shift), gate)

    def forward(self, X: Tensor, params: dict) -> Tensor:
        z = self.cell(X, X, params, "k1")
        z = self.cell(z, X, params, "k2")
        return _apply_dense(z, params, "out")
