from __future__ import annotations

import numpy as np

from ..numcore import DimensionError, Tensor, parameter
from ..numcore import tensor as ops
from .base import NeuralForecaster, init_uniform

SCNN_KERNELS = (3, 5, 7, 11, 13)
FILTERS = 16


def _conv_params(rng, prefix: str, out_ch: int, in_ch: int, width: int) -> dict:
    fan_in = in_ch * width
    return {
        f"{prefix}.K": parameter(init_uniform(rng, (out_ch, in_ch, width), fan_in), name=f"{prefix}.K"),
        f"{prefix}.b": parameter(init_uniform(rng, (out_ch,), fan_in), name=f"{prefix}.b"),
    }


def _dense(rng, prefix: str, fan_in: int, fan_out: int) -> dict:
    return {
        f"{prefix}.W": parameter(init_uniform(rng, (fan_in, fan_out), fan_in), name=f"{prefix}.W"),
        f"{prefix}.b": parameter(init_uniform(rng, (fan_out,), fan_in), name=f"{prefix}.b"),
    }


def _as_signal(X: Tensor) -> Tensor:
    return ops.reshape(X, (X.shape[0], 1, X.shape[1]))


class SpectralCNN(NeuralForecaster):
    """Parallel conv branches (widths 3..13, 16 filters each), average-pooled and concatenated."""

    kind = "SCNN"
    kernels = SCNN_KERNELS

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        if max(self.kernels) > m:
            raise DimensionError(f"SCNN kernel {max(self.kernels)} is wider than the {m}-day input")
        self.params = {}
        for k in self.kernels:
            self.params.update(_conv_params(self.rng, f"br{k}", FILTERS, 1, k))
        self.params.update(_dense(self.rng, "out", FILTERS * len(self.kernels), n))

    def features(self, X: Tensor, params: dict) -> Tensor:
        x = _as_signal(X)
        pooled = []
        for k in self.kernels:
            h = ops.relu(ops.conv1d(x, params[f"br{k}.K"], params[f"br{k}.b"]))
            pooled.append(ops.mean(h, axis=2))
        return ops.concat(pooled, axis=1)

    def forward(self, X: Tensor, params: dict) -> Tensor:
        f = self.features(X, params)
        return ops.add(ops.matmul(f, params["out.W"]), params["out.b"])


class SequentialCNN(NeuralForecaster):
    """conv(5,16) -> relu -> conv(3,16) -> relu -> flatten -> dense."""

    kind = "CNN_SEQ"

    def _init_params(self) -> None:
        m, n = self.spec.input_len, self.spec.output_len
        if m < 7:
            raise DimensionError(f"CNN_SEQ needs at least 7 input days, got {m}")
        flat = FILTERS * (m - 4 - 2)
        self.params = {}
        self.params.update(_conv_params(self.rng, "c1", FILTERS, 1, 5))
        self.params.update(_conv_params(self.rng, "c2", FILTERS, FILTERS, 3))
        self.params.update(_dense(self.rng, "out", flat, n))

    def forward(self, X: Tensor, params: dict) -> Tensor:
        h = ops.relu(ops.conv1d(_as_signal(X), params["c1.K"], params["c1.b"]))
        h = ops.relu(ops.conv1d(h, params["c2.K"], params["c2.b"]))
        h = ops.reshape(h, (h.shape[0], int(np.prod(h.shape[1:]))))
        return ops.add(ops.matmul(h, params["out.W"]), params["out.b"])
