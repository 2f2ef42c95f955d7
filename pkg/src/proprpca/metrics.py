"""Evaluation metrics for predicted component scores and reconstructions."""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateInput, DimensionMismatch

__all__ = ["prediction_r2", "prediction_r2_mse", "reconstruction_error"]


def prediction_r2(u_true: np.ndarray, u_hat: np.ndarray) -> float:
    """Squared Pearson correlation between true and predicted scores."""
    u_true = np.asarray(u_true, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float)
    if u_true.shape != u_hat.shape or u_true.ndim != 1:
        raise DimensionMismatch(
            f"shapes {u_true.shape} and {u_hat.shape} do not conform"
        )
    if u_true.size < 3:
        raise DegenerateInput("need at least 3 points")
    if np.std(u_true) == 0 or np.std(u_hat) == 0:
        raise DegenerateInput("constant input has undefined correlation")
    r = np.corrcoef(u_true, u_hat)[0, 1]
    return float(min(r * r, 1.0))


def prediction_r2_mse(u_true: np.ndarray, u_hat: np.ndarray) -> float:
    """Companion MSE-based score 1 - MSE/Var(u_true); can be negative."""
    u_true = np.asarray(u_true, dtype=float)
    u_hat = np.asarray(u_hat, dtype=float)
    if u_true.shape != u_hat.shape or u_true.ndim != 1:
        raise DimensionMismatch(
            f"shapes {u_true.shape} and {u_hat.shape} do not conform"
        )
    var = np.var(u_true)
    if var == 0:
        raise DegenerateInput("constant truth has undefined variance ratio")
    return float(1.0 - np.mean((u_true - u_hat) ** 2) / var)


def reconstruction_error(x_test: np.ndarray, u_hat: np.ndarray, v_hat: np.ndarray) -> float:
    """Frobenius distance between the test matrix and its rank-q
    reconstruction from predicted scores and training loadings."""
    x_test = np.asarray(x_test, dtype=float)
    u_hat = np.atleast_2d(np.asarray(u_hat, dtype=float))
    v_hat = np.atleast_2d(np.asarray(v_hat, dtype=float))
    if u_hat.shape[0] == 1 and x_test.shape[0] != 1:
        u_hat = u_hat.T
    if v_hat.shape[0] == 1 and x_test.shape[1] != 1:
        v_hat = v_hat.T
    if (
        u_hat.shape[0] != x_test.shape[0]
        or v_hat.shape[0] != x_test.shape[1]
        or u_hat.shape[1] != v_hat.shape[1]
    ):
        raise DimensionMismatch(
            f"x {x_test.shape}, u {u_hat.shape}, v {v_hat.shape} do not conform"
        )
    return float(np.linalg.norm(x_test - u_hat @ v_hat.T))
