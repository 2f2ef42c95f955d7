"""SoftImpute low-rank matrix completion.

Baseline imputer applied before the complete-data reducers: iterate
soft-thresholded SVDs of the observed entries plus the current fill, which
monotonically decreases 0.5*||P_obs(X - M)||_F^2 + lam*||M||_*.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator

from .data import ObservedMatrix
from .exceptions import NoConvergenceWarning

__all__ = ["SoftImpute", "soft_impute", "soft_impute_cv", "default_lambda_grid"]


class SoftImpute(BaseEstimator):
    """Matrix completion by iterative soft-thresholded SVD.

    Parameters
    ----------
    lam : float
        Soft threshold applied to the singular values.
    rank_cap : int or None
        Hard truncation rank; None means min(n, p).
    tol : float
        Relative Frobenius-change stopping tolerance.
    max_iter : int
        Iteration cap; hitting it raises NoConvergenceWarning.

    Attributes
    ----------
    objective_trace_ : list of float
        Penalized objective after each iteration (non-increasing).
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, lam=0.0, rank_cap=None, tol=1e-5, max_iter=300):
        self.lam = lam
        self.rank_cap = rank_cap
        self.tol = tol
        self.max_iter = max_iter

    def fit_transform(self, X, y=None):
        """Complete the matrix; observed cells of the output keep their
        observed values exactly."""
        x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
        mask = x.mask
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        rank_cap = self.rank_cap or min(x.n, x.p)

        counts = mask.sum(axis=0)
        means = np.where(mask, x.values, 0.0).sum(axis=0) / counts
        xc = np.where(mask, x.values - means[None, :], 0.0)

        m_hat = np.zeros_like(xc)
        self.objective_trace_ = []
        self.converged_ = False
        it = 0
        for it in range(1, self.max_iter + 1):
            y_work = np.where(mask, xc, m_hat)
            u, s, vt = np.linalg.svd(y_work, full_matrices=False)
            s_thr = np.maximum(s - self.lam, 0.0)
            s_thr[rank_cap:] = 0.0
            m_new = (u * s_thr) @ vt
            obj = 0.5 * np.sum((xc - m_new)[mask] ** 2) + self.lam * s_thr.sum()
            self.objective_trace_.append(obj)
            denom = max(np.linalg.norm(m_hat), 1e-12)
            delta = np.linalg.norm(m_new - m_hat) / denom
            m_hat = m_new
            if delta < self.tol:
                self.converged_ = True
                break
        self.n_iter_ = it
        if not self.converged_:
            warnings.warn(
                f"SoftImpute stopped at max_iter={self.max_iter}",
                NoConvergenceWarning,
            )
        out = m_hat + means[None, :]
        out[mask] = x.values[mask]
        return out

    def fit(self, X, y=None):
        self.fit_transform(X)
        return self


def soft_impute(X, lam, rank_cap=None, tol=1e-5, max_iter=300) -> np.ndarray:
    """Functional form of :class:`SoftImpute`."""
    return SoftImpute(lam=lam, rank_cap=rank_cap, tol=tol, max_iter=max_iter).fit_transform(X)


def default_lambda_grid(X, n_points: int = 10) -> np.ndarray:
    """10 log-spaced thresholds from 0.01*sigma1 to sigma1 of the
    mean-imputed (centered) matrix."""
    x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
    counts = x.mask.sum(axis=0)
    means = np.where(x.mask, x.values, 0.0).sum(axis=0) / counts
    xc = np.where(x.mask, x.values - means[None, :], 0.0)
    sigma1 = np.linalg.svd(xc, compute_uv=False)[0]
    return np.geomspace(0.01 * sigma1, sigma1, n_points)


def _holdout_cells(mask: np.ndarray, frac: float, rng) -> np.ndarray:
    """Boolean held-out selector over observed cells, keeping every row with
    at least 1 and every column with at least 2 observed entries."""
    obs_idx = np.argwhere(mask)
    order = rng.permutation(len(obs_idx))
    target = int(round(frac * len(obs_idx)))
    row_counts = mask.sum(axis=1).astype(int)
    col_counts = mask.sum(axis=0).astype(int)
    held = np.zeros_like(mask)
    taken = 0
    for k in order:
        if taken >= target:
            break
        i, j = obs_idx[k]
        if row_counts[i] <= 1 or col_counts[j] <= 2:
            continue
        held[i, j] = True
        row_counts[i] -= 1
        col_counts[j] -= 1
        taken += 1
    return held


def soft_impute_cv(
    X,
    lambda_grid=None,
    holdout_frac: float = 0.1,
    seed=0,
    rank_cap=None,
    tol=1e-5,
    max_iter=300,
):
    """Pick lam by held-out RMSE over a grid, then refit on all observed
    entries. Returns (completed matrix, chosen lam)."""
    x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(x)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if lambda_grid.size == 0:
        raise ValueError("lambda_grid must be nonempty")

    rng = np.random.default_rng(seed)
    held = _holdout_cells(x.mask, holdout_frac, rng)
    train_mask = x.mask & ~held
    x_train = ObservedMatrix(np.where(train_mask, x.values, np.nan), train_mask)

    best_lam = float(lambda_grid[0])
    best_rmse = np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        for lam in lambda_grid:
            filled = soft_impute(x_train, lam, rank_cap=rank_cap, tol=tol, max_iter=max_iter)
            err = filled[held] - x.values[held]
            rmse = float(np.sqrt(np.mean(err**2))) if held.any() else 0.0
            if rmse < best_rmse:
                best_rmse = rmse
                best_lam = float(lam)
    completed = soft_impute(x, best_lam, rank_cap=rank_cap, tol=tol, max_iter=max_iter)
    return completed, best_lam
