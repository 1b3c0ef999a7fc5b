from __future__ import annotations

import numpy as np

from .tensor import DimensionError

RIDGE_JITTER = 1e-8


class SingularMatrixError(np.linalg.LinAlgError):
    """Design matrix is rank deficient and no fallback was allowed."""


def add_bias_column(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.hstack([X, np.ones((X.shape[0], 1))])


FALLBACKS = ("min_norm", "ridge")


def solve_least_squares(X, Y, fallback: str | None = None, ridge: float = RIDGE_JITTER,
                        rcond: float = 1e-10) -> np.ndarray:
    """Minimise ``||XW - Y||^2`` for ``W``.

    Full column rank is solved by Householder QR. A rank-deficient ``X``
    raises :class:`SingularMatrixError` unless a fallback is named:

    ``"min_norm"``
        the minimum-norm minimiser (SVD), i.e. the ``ridge -> 0`` limit;
    ``"ridge"``
        ``(X^T X + ridge I) W = X^T Y`` through the augmented system
        ``[X; sqrt(ridge) I]`` so the normal matrix is never formed.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    vector_target = Y.ndim == 1
    if vector_target:
        Y = Y[:, None]
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise DimensionError(f"solve_least_squares: X {X.shape} and Y {Y.shape} disagree")
    if fallback is not None and fallback not in FALLBACKS:
        raise ValueError(f"fallback must be one of {FALLBACKS}, got {fallback!r}")
    n, p = X.shape

    Q, R = np.linalg.qr(X, mode="reduced") if n >= p else (None, None)
    full_rank = False
    if R is not None:
        diag = np.abs(np.diag(R))
        full_rank = diag.size == p and diag.min() > rcond * max(diag.max(), 1e-300)
    if full_rank:
        W = np.linalg.solve(R, Q.T @ Y)
    elif fallback == "min_norm":
        W = np.linalg.lstsq(X, Y, rcond=None)[0]
    elif fallback == "ridge":
        Xa = np.vstack([X, np.sqrt(ridge) * np.eye(p)])
        Ya = np.vstack([Y, np.zeros((p, Y.shape[1]))])
        Qa, Ra = np.linalg.qr(Xa, mode="reduced")
        W = np.linalg.solve(Ra, Qa.T @ Ya)
    else:
        raise SingularMatrixError(
            f"design matrix {X.shape} is rank deficient; pass fallback='min_norm' or 'ridge'"
        )
    return W[:, 0] if vector_target else W
