"""LSTM and GRU forecasters.

``*_VEC`` reads the input window step by step and maps the last hidden state
to the whole horizon. ``*_VAL`` learns next-day prediction; at test time it
is applied ``output_len`` times, each time on the window rolled by its own
previous prediction.
"""
from __future__ import annotations

import numpy as np

from ..numcore import Adam, Tensor, parameter
from ..numcore import tensor as ops
from ..windowing import normalize_window, scale_rows
from .base import DivergenceError, LayerSizing, NeuralForecaster, TrainingSet, init_uniform


def _col(a: Tensor, lo: int, hi: int) -> Tensor:
    return ops.take(a, (slice(None), slice(lo, hi)))


class RecurrentForecaster(NeuralForecaster):
    cell_type = "LSTM"
    mode = "VEC"

    @property
    def hidden(self) -> int:
        return self.spec.hidden or LayerSizing.for_input(self.spec.input_len).hidden2

    def _init_params(self) -> None:
        H = self.hidden
        gates = 4 if self.cell_type == "LSTM" else 3
        rng = self.rng
        self.params = {
            "Wx": parameter(init_uniform(rng, (1, gates * H), H), name="Wx"),
            "Wh": parameter(init_uniform(rng, (H, gates * H), H), name="Wh"),
            "b": parameter(init_uniform(rng, (gates * H,), H), name="b"),
        }
        if self.cell_type == "GRU":
            self.params["bh"] = parameter(init_uniform(rng, (gates * H,), H), name="bh")
        out = self.spec.output_len if self.mode == "VEC" else 1
        self.params["out.W"] = parameter(init_uniform(rng, (H, out), H), name="out.W")
        self.params["out.b"] = parameter(init_uniform(rng, (out,), H), name="out.b")

    # one recurrence step; xp is the precomputed input projection for this step
    def step(self, xp: Tensor, h: Tensor, c: Tensor | None, params: dict):
        H = self.hidden
        if self.cell_type == "LSTM":
            z = ops.add(xp, ops.matmul(h, params["Wh"]))
            i = ops.sigmoid(_col(z, 0, H))
            f = ops.sigmoid(_col(z, H, 2 * H))
            g = ops.tanh(_col(z, 2 * H, 3 * H))
            o = ops.sigmoid(_col(z, 3 * H, 4 * H))
            c = ops.add(ops.mul(f, c), ops.mul(i, g))
            h = ops.mul(o, ops.tanh(c))
            return h, c
        hp = ops.add(ops.matmul(h, params["Wh"]), params["bh"])
        r = ops.sigmoid(ops.add(_col(xp, 0, H), _col(hp, 0, H)))
        u = ops.sigmoid(ops.add(_col(xp, H, 2 * H), _col(hp, H, 2 * H)))
        n = ops.tanh(ops.add(_col(xp, 2 * H, 3 * H), ops.mul(r, _col(hp, 2 * H, 3 * H))))
        h = ops.add(ops.mul(ops.sub(1.0, u), n), ops.mul(u, h))
        return h, None

    def run(self, X: Tensor, params: dict) -> list[Tensor]:
        """Hidden states after each step for a (batch, steps) input."""
        B, T = X.shape
        H = self.hidden
        proj = ops.add(ops.mul(ops.reshape(X, (B, T, 1)), params["Wx"]), params["b"])
        h = Tensor(np.zeros((B, H)))
        c = Tensor(np.zeros((B, H))) if self.cell_type == "LSTM" else None
        states = []
        for t in range(T):
            h, c = self.step(ops.take(proj, (slice(None), t)), h, c, params)
            states.append(h)
        return states

    def readout(self, h: Tensor, params: dict) -> Tensor:
        return ops.add(ops.matmul(h, params["out.W"]), params["out.b"])

    def forward(self, X: Tensor, params: dict) -> Tensor:
        if self.mode == "VEC":
            return self.readout(self.run(X, params)[-1], params)
        return self.next_value(X, params)

    # -- sequence-to-value ------------------------------------------------------

    def next_value(self, X: Tensor, params: dict) -> Tensor:
        """One-step forecast (batch, 1) from the full window."""
        return self.readout(self.run(X, params)[-1], params)

    def sequence_loss(self, S: np.ndarray, T: np.ndarray, params: dict | None = None) -> Tensor:
        """MSE of every step's next-day prediction; S inputs, T targets, both (batch, steps)."""
        params = self.params if params is None else params
        states = self.run(Tensor(S), params)
        preds = ops.concat([self.readout(h, params) for h in states], axis=1)
        return ops.mse(preds, Tensor(T))

    def _sequences(self, data: TrainingSet) -> tuple[np.ndarray, np.ndarray]:
        if self.spec.val_context == "session" and data.context is not None:
            trace = data.context
            if self.spec.normalize:
                w = normalize_window(trace[:-1])
                trace = scale_rows(trace[None, :], np.array([[w.lo]]), np.array([[w.hi]]))[0]
            return trace[None, :-1], trace[None, 1:]
        # sliding reading: each observation's window plus its first label day
        X, Y = self._scaled(data)
        full = np.hstack([X, Y[:, :1]])
        return full[:, :-1], full[:, 1:]

    def fit(self, data: TrainingSet):
        if self.mode == "VEC":
            return super().fit(data)
        self._check(data)
        S, T = self._sequences(data)
        opt = Adam(list(self.params.values()), lr=self.spec.lr)
        for epoch in range(1, self.spec.epochs + 1):
            opt.zero_grad()
            loss = self.sequence_loss(S, T)
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(epoch, value)
            loss.backward()
            opt.step()
            self.loss_history.append(value)
        self.trained = True
        return self

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        if self.mode == "VEC":
            return super()._predict_scaled(X)
        params = self.detached()
        window = X.copy()
        out = np.empty((X.shape[0], self.spec.output_len))
        for j in range(self.spec.output_len):
            nxt = self.next_value(Tensor(window), params).data[:, 0]
            out[:, j] = nxt
            window = np.hstack([window[:, 1:], nxt[:, None]])
        return out


class LSTMVec(RecurrentForecaster):
    kind = "LSTM_VEC"
    cell_type, mode = "LSTM", "VEC"


class LSTMVal(RecurrentForecaster):
    kind = "LSTM_VAL"
    cell_type, mode = "LSTM", "VAL"


class GRUVec(RecurrentForecaster):
    kind = "GRU_VEC"
    cell_type, mode = "GRU", "VEC"


class GRUVal(RecurrentForecaster):
    kind = "GRU_VAL"
    cell_type, mode = "GRU", "VAL"
