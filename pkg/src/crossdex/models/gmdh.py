"""Self-organising GMDH network of pairwise squared-linear neurons.

Each generation proposes one neuron ``(w1 x_i + w2 x_j + w0)^2`` for every
unordered pair of the previous layer's outputs. All candidates are trained
together by Adam (each with its own linear head onto the targets, so a
scalar neuron can be scored against a multi-output target), ranked by
validation MSE, and the best ``gmdh_survivors`` become the next layer's
inputs. Growth stops once validation MSE stops improving by ``gmdh_tol`` or
after ``gmdh_max_layers`` generations. A closed-form linear readout maps the
final survivors to the outputs.
"""
from __future__ import annotations

import itertools

import numpy as np

from ..numcore import Adam, Tensor, add_bias_column, parameter, solve_least_squares
from ..numcore import tensor as ops
from .base import DivergenceError, Forecaster, TrainingError, TrainingSet


def neuron(xi, xj, w) -> np.ndarray:
    """Evaluate ``(w1 xi + w2 xj + w0)^2``."""
    return (w[0] * np.asarray(xi) + w[1] * np.asarray(xj) + w[2]) ** 2


def _affine_heads(Z: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-candidate least-squares ``y ~ a z + b``; Z is (n, C), Y is (n, q)."""
    zc = Z - Z.mean(axis=0)
    yc = Y - Y.mean(axis=0)
    var = (zc ** 2).sum(axis=0)
    a = (zc.T @ yc) / np.where(var > 0, var, 1.0)[:, None]  # (C, q)
    b = Y.mean(axis=0)[None, :] - a * Z.mean(axis=0)[:, None]
    return a, b


def quadratic_start(xi: np.ndarray, xj: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Initial ``[w1, w2, w0]`` from the unconstrained quadratic fit of one pair.

    Fits ``c0 + c1 xi + c2 xj + c3 xi xj + c4 xi^2 + c5 xj^2`` to every
    target by least squares, folds the coefficients into a symmetric 3x3
    form over ``(xi, xj, 1)``, takes the shared form across targets (leading
    singular vector) and returns its dominant rank-1 factor. When the target
    is itself a squared linear form this is already the exact solution.
    """
    D = np.column_stack([np.ones_like(xi), xi, xj, xi * xj, xi ** 2, xj ** 2])
    c = solve_least_squares(D, Y, fallback="min_norm")  # (6, q)
    c0, c1, c2, c3, c4, c5 = c
    forms = np.stack([
        np.stack([c4, c3 / 2, c1 / 2], axis=-1),
        np.stack([c3 / 2, c5, c2 / 2], axis=-1),
        np.stack([c1 / 2, c2 / 2, c0], axis=-1),
    ], axis=1)  # (q, 3, 3)
    flat = forms.reshape(forms.shape[0], 9)
    _, _, vt = np.linalg.svd(flat, full_matrices=False)
    M = vt[0].reshape(3, 3)
    M = (M + M.T) / 2
    vals, vecs = np.linalg.eigh(M)
    k = int(np.argmax(np.abs(vals)))
    # unit-norm form; the affine head fitted afterwards restores amplitude and sign
    return vecs[:, k] * np.sqrt(np.abs(vals[k]))


class GMDH(Forecaster):
    kind = "GMDH"

    def _init_params(self) -> None:
        if self.spec.input_len < 2:
            raise TrainingError("GMDH needs at least two inputs to form neuron pairs")
        self.layers: list[dict] = []
        self.readout: np.ndarray | None = None
        self.validation_history: list[float] = []

    # candidate generation ------------------------------------------------------

    @staticmethod
    def candidate_loss(w: Tensor, head_a: Tensor, head_b: Tensor,
                       Fi: np.ndarray, Fj: np.ndarray, Y: np.ndarray) -> Tensor:
        """Mean over candidates of each candidate's MSE.

        ``Fi``/``Fj`` are (n, C) pair inputs, ``w`` is (C, 3), heads are (C, q).
        """
        lin = ops.add(ops.add(ops.mul(ops.take(w, (slice(None), 0)), Fi),
                              ops.mul(ops.take(w, (slice(None), 1)), Fj)),
                      ops.take(w, (slice(None), 2)))
        z = ops.square(lin)  # (n, C)
        n, C = Fi.shape
        pred = ops.add(ops.mul(ops.reshape(z, (n, C, 1)), head_a), head_b)  # (n, C, q)
        return ops.mean(ops.square(ops.sub(pred, Tensor(Y[:, None, :]))))

    def _train_candidates(self, F: np.ndarray, Y: np.ndarray, train_idx, val_idx):
        pairs = list(itertools.combinations(range(F.shape[1]), 2))
        C = len(pairs)
        ii = np.array([p[0] for p in pairs])
        jj = np.array([p[1] for p in pairs])
        Fi, Fj, Yt = F[train_idx][:, ii], F[train_idx][:, jj], Y[train_idx]
        w0 = np.stack([quadratic_start(Fi[:, k], Fj[:, k], Yt) for k in range(C)])
        # small jitter so that degenerate starts (all-zero forms) can still move
        w0 = w0 + 1e-3 * self.rng.standard_normal(w0.shape)
        a0, b0 = _affine_heads(neuron(Fi, Fj, w0.T), Yt)
        w = parameter(w0, name="w")
        a = parameter(a0, name="a")
        b = parameter(b0, name="b")
        opt = Adam([w, a, b], lr=self.spec.lr)
        for epoch in range(1, self.spec.epochs + 1):
            opt.zero_grad()
            loss = self.candidate_loss(w, a, b, Fi, Fj, Yt)
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(epoch, value)
            loss.backward()
            opt.step()
        Z = neuron(F[:, ii], F[:, jj], w.data.T)  # (n, C)
        pv = Z[val_idx][:, :, None] * a.data[None] + b.data[None]
        val_mse = ((pv - Y[val_idx][:, None, :]) ** 2).mean(axis=(0, 2))
        val_mse = np.where(np.isfinite(val_mse), val_mse, np.inf)
        return pairs, w.data, Z, val_mse

    def fit(self, data: TrainingSet) -> "GMDH":
        self._check(data)
        X, Y = self._scaled(data)
        n = X.shape[0]
        if n < 2:
            raise TrainingError("GMDH needs at least two observations for a validation split")
        perm = self.rng.permutation(n)
        n_val = max(1, n // 3)
        val_idx, train_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        S = self.spec.gmdh_survivors

        F = X
        best = np.inf
        self.layers, self.validation_history = [], []
        for generation in range(self.spec.gmdh_max_layers):
            pairs, w, Z, val_mse = self._train_candidates(F, Y, train_idx, val_idx)
            order = np.argsort(val_mse, kind="stable")[:min(S, len(pairs))]
            layer_best = float(val_mse[order[0]])
            if generation > 0 and not layer_best <= best - self.spec.gmdh_tol:
                break
            best = layer_best
            self.validation_history.append(layer_best)
            self.layers.append({"pairs": [list(pairs[k]) for k in order], "w": w[order].tolist()})
            F = Z[:, order]
            if F.shape[1] < 2:
                break

        self.readout = solve_least_squares(add_bias_column(F), Y, fallback="min_norm")
        self._sync_state()
        self.trained = True
        return self

    def _sync_state(self) -> None:
        self.extra = {"layers": self.layers, "validation_history": self.validation_history}
        self.params = {"readout": parameter(self.readout, name="readout")}

    def load_state(self, d: dict) -> None:
        super().load_state(d)
        self.layers = self.extra.get("layers", [])
        self.validation_history = self.extra.get("validation_history", [])
        self.readout = self.params["readout"].data if "readout" in self.params else None

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Outputs of the last surviving layer."""
        F = X
        for layer in self.layers:
            pairs = np.array(layer["pairs"], dtype=int)
            w = np.array(layer["w"])
            F = neuron(F[:, pairs[:, 0]], F[:, pairs[:, 1]], w.T)
        return F

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        return add_bias_column(self.transform(X)) @ self.readout

    @property
    def n_layers(self) -> int:
        return len(self.layers)
