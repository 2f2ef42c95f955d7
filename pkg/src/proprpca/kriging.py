"""Universal kriging of component scores with an exponential covariance.

Fitting profiles the Gaussian likelihood: the mean coefficients are solved
by GLS and the overall scale analytically, leaving a 2-D numeric search
over (log range, log nugget-to-sill ratio) started from the best of a
range grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .data import SiteFrame
from .exceptions import (
    CovarianceSingular,
    OptimFailed,
    RankDeficientDesign,
    SchemaMismatch,
)

__all__ = [
    "ExponentialCovParams",
    "exp_cov_matrix",
    "KrigingModel",
    "uk_fit",
    "uk_predict",
    "UniversalKriging",
    "uk_design",
    "UKDesignSpec",
]

_CHOL_JITTER = 1e-10


@dataclass(frozen=True)
class ExponentialCovParams:
    """Exponential covariance sigma^2 exp(-d/phi) with nugget tau^2 at d=0."""

    partial_sill: float
    nugget: float
    range: float

    def __post_init__(self):
        if not self.partial_sill > 0:
            raise ValueError("partial_sill must be positive")
        if self.nugget < 0:
            raise ValueError("nugget must be nonnegative")
        if not self.range > 0:
            raise ValueError("range must be positive")


def exp_cov_matrix(coords_a, coords_b, params: ExponentialCovParams) -> np.ndarray:
    """Covariance between two site sets; the nugget applies at zero distance."""
    d = cdist(np.asarray(coords_a, float), np.asarray(coords_b, float))
    cov = params.partial_sill * np.exp(-d / params.range)
    if params.nugget:
        cov = cov + params.nugget * (d == 0)
    return cov


@dataclass
class KrigingModel:
    """Fitted universal-kriging state: GLS mean coefficients, covariance
    parameters, and the cached training solves used by prediction."""

    mean_coefs: np.ndarray
    cov: ExponentialCovParams
    train_coords: np.ndarray
    train_design: np.ndarray
    train_residual_info: dict = field(repr=False, default_factory=dict)
    loglik: float = np.nan
    start_grid: list = field(repr=False, default_factory=list)


def _chol(mat, overwrite=False):
    try:
        return cho_factor(mat, lower=True, overwrite_a=overwrite, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return cho_factor(
            mat + _CHOL_JITTER * np.eye(mat.shape[0]), lower=True, check_finite=False
        )
    except np.linalg.LinAlgError as err:
        raise CovarianceSingular("kriging covariance not positive definite") from err


def _profile_loglik(log_phi, log_nu, dist, design, y):
    """Log-likelihood with sill profiled and mean coefficients GLS-solved.

    The covariance is sigma2 * (exp(-d/phi) + nu I); sigma2_hat = quad/n.
    Returns (loglik, beta, sigma2, nu) or None when the factorization fails.
    """
    n = y.size
    phi = np.exp(log_phi)
    nu = np.exp(log_nu)
    c = np.exp(dist * (-1.0 / phi))
    c[np.diag_indices_from(c)] += nu
    try:
        l = _chol(c, overwrite=True)
    except CovarianceSingular:
        return None
    logdet = 2.0 * np.sum(np.log(np.diag(l[0])))
    rhs = np.column_stack([design, y])
    ci_rhs = cho_solve(l, rhs, check_finite=False)
    ci_x, ci_y = ci_rhs[:, :-1], ci_rhs[:, -1]
    g = design.T @ ci_x
    try:
        beta = np.linalg.solve(g, design.T @ ci_y)
    except np.linalg.LinAlgError:
        return None
    # quad = resid' C^-1 resid expanded through the cached solves
    quad = y @ ci_y - 2.0 * beta @ (design.T @ ci_y) + beta @ (g @ beta)
    if quad <= 0:
        quad = 1e-300
    sigma2 = quad / n
    ll = -0.5 * (n * np.log(sigma2) + logdet + n + n * np.log(2 * np.pi))
    return ll, beta, sigma2, nu


def uk_fit(
    score: np.ndarray,
    design: np.ndarray,
    coords: np.ndarray,
    cov_params: Optional[ExponentialCovParams] = None,
    n_phi_starts: int = 5,
    nm_maxiter: int = 80,
) -> KrigingModel:
    """Fit score ~ N(design b, sigma2 exp(-d/phi) + tau2 I) by profile ML.

    When `cov_params` is given the covariance is held fixed and only the
    GLS mean is estimated (used by the prediction-stage tests).
    """
    y = np.asarray(score, dtype=float)
    design = np.asarray(design, dtype=float)
    coords = np.asarray(coords, dtype=float)
    n, m = design.shape
    if y.shape != (n,) or coords.shape != (n, 2):
        raise SchemaMismatch("score, design, and coords row counts disagree")
    if np.linalg.matrix_rank(design) < m:
        raise RankDeficientDesign("design is rank deficient")
    if cov_params is None and n <= m + 3:
        raise RankDeficientDesign(f"need n > m + 3 to fit covariance (n={n}, m={m})")
    dist = cdist(coords, coords)

    if cov_params is not None:
        model = KrigingModel(
            mean_coefs=np.zeros(m),
            cov=cov_params,
            train_coords=coords,
            train_design=design,
        )
        _finalize(model, dist, design, y)
        return model

    maxd = dist[dist > 0].max() if (dist > 0).any() else 1.0
    phi_lo, phi_hi = 1e-3 * maxd, 10.0 * maxd
    phi_grid = np.geomspace(max(phi_lo, 0.05 * maxd), min(phi_hi, 2.0 * maxd), n_phi_starts)
    nu0 = 0.1

    start_grid = []
    best = None
    best_x = None
    for phi in phi_grid:
        x = (np.log(phi), np.log(nu0))
        res = _profile_loglik(x[0], x[1], dist, design, y)
        if res is None:
            continue
        start_grid.append((phi, nu0, res[0]))
        if best is None or res[0] > best[0]:
            best = res
            best_x = x
    if best is None:
        raise OptimFailed("no valid covariance candidate on the start grid")

    lo, hi = np.log(phi_lo), np.log(phi_hi)

    def neg(x):
        lp = min(max(x[0], lo), hi)
        ln = min(max(x[1], -20.0), 8.0)
        res = _profile_loglik(lp, ln, dist, design, y)
        if res is None:
            return 1e12
        return -res[0]

    opt = minimize(
        neg,
        np.asarray(best_x),
        method="Nelder-Mead",
        options={"maxiter": nm_maxiter, "xatol": 3e-2, "fatol": 5e-2},
    )
    xf = (min(max(opt.x[0], lo), hi), min(max(opt.x[1], -20.0), 8.0))
    res = _profile_loglik(xf[0], xf[1], dist, design, y)
    if res is None or res[0] < best[0]:
        res = best
        xf = best_x
    ll, beta, sigma2, nu = res
    params = ExponentialCovParams(
        partial_sill=float(sigma2), nugget=float(sigma2 * nu), range=float(np.exp(xf[0]))
    )
    model = KrigingModel(
        mean_coefs=beta,
        cov=params,
        train_coords=coords,
        train_design=design,
        loglik=float(ll),
        start_grid=start_grid,
    )
    _finalize(model, dist, design, y)
    return model


def _finalize(model: KrigingModel, dist, design, y):
    """Cache the training solves needed by the predictor; refresh the GLS
    mean at the final covariance."""
    p = model.cov
    sigma = p.partial_sill * np.exp(-dist / p.range) + p.nugget * np.eye(len(y))
    l = _chol(sigma)
    si_x = cho_solve(l, design)
    g = design.T @ si_x
    g_f = cho_factor(g)
    beta = cho_solve(g_f, design.T @ cho_solve(l, y))
    resid = y - design @ beta
    model.mean_coefs = beta
    model.train_residual_info = {
        "chol": l,
        "alpha": cho_solve(l, resid),
        "si_x": si_x,
        "g_factor": g_f,
        "y": y,
    }


def uk_predict(model: KrigingModel, new_design, new_coords, return_var: bool = False):
    """Universal-kriging prediction (and variance) at new sites."""
    new_design = np.asarray(new_design, dtype=float)
    new_coords = np.asarray(new_coords, dtype=float)
    if new_design.shape[1] != model.train_design.shape[1]:
        raise SchemaMismatch(
            f"new design has {new_design.shape[1]} columns, "
            f"model expects {model.train_design.shape[1]}"
        )
    if new_coords.shape != (new_design.shape[0], 2):
        raise SchemaMismatch("new_coords must be (m, 2) matching new_design rows")
    info = model.train_residual_info
    cross = exp_cov_matrix(model.train_coords, new_coords, model.cov)
    pred = new_design @ model.mean_coefs + cross.T @ info["alpha"]
    if not return_var:
        return pred
    si_c = cho_solve(info["chol"], cross)
    var0 = model.cov.partial_sill + model.cov.nugget
    h = new_design - cross.T @ info["si_x"]
    gls_term = np.einsum("ij,ij->i", h, cho_solve(info["g_factor"], h.T).T)
    var = var0 - np.einsum("ij,ij->j", cross, si_c) + gls_term
    return pred, np.maximum(var, 0.0)


class UniversalKriging(BaseEstimator):
    """Estimator wrapper around :func:`uk_fit` / :func:`uk_predict`.

    Parameters
    ----------
    cov_params : ExponentialCovParams or None
        Fix the covariance instead of estimating it.
    n_phi_starts : int
        Size of the range grid seeding the numeric search.
    nm_maxiter : int
        Nelder-Mead iteration cap for the profiled search.
    """

    def __init__(self, cov_params=None, n_phi_starts=5, nm_maxiter=80):
        self.cov_params = cov_params
        self.n_phi_starts = n_phi_starts
        self.nm_maxiter = nm_maxiter

    def fit(self, score, design, coords):
        self.model_ = uk_fit(
            score,
            design,
            coords,
            cov_params=self.cov_params,
            n_phi_starts=self.n_phi_starts,
            nm_maxiter=self.nm_maxiter,
        )
        return self

    def predict(self, new_design, new_coords, return_var=False):
        if not hasattr(self, "model_"):
            raise AttributeError("fit before predict")
        return uk_predict(self.model_, new_design, new_coords, return_var=return_var)


@dataclass(frozen=True)
class UKDesignSpec:
    """Standardization constants for the kriging mean design
    [1 | covariates | x | y], fitted on training sites."""

    covar_means: np.ndarray
    covar_sds: np.ndarray
    coord_means: np.ndarray
    coord_sds: np.ndarray


def uk_design(frame: SiteFrame, spec: Optional[UKDesignSpec] = None):
    """Build the prediction mean design for a site frame.

    Fitting mode (spec None) returns (design, spec); evaluation mode applies
    the training standardization and returns the design only.
    """
    if spec is None:
        cm = frame.covars.mean(axis=0) if frame.k else np.empty(0)
        cs = frame.covars.std(axis=0) if frame.k else np.empty(0)
        cs = np.where(cs == 0, 1.0, cs)
        xm = frame.coords.mean(axis=0)
        xs = frame.coords.std(axis=0)
        xs = np.where(xs == 0, 1.0, xs)
        spec_out = UKDesignSpec(cm, cs, xm, xs)
        return _uk_design_apply(frame, spec_out), spec_out
    if frame.k != spec.covar_means.size:
        raise SchemaMismatch(
            f"frame has {frame.k} covariates, design spec expects {spec.covar_means.size}"
        )
    return _uk_design_apply(frame, spec)


def _uk_design_apply(frame: SiteFrame, spec: UKDesignSpec) -> np.ndarray:
    cols = [np.ones((frame.n, 1))]
    if frame.k:
        cols.append((frame.covars - spec.covar_means) / spec.covar_sds)
    cols.append((frame.coords - spec.coord_means) / spec.coord_sds)
    return np.hstack(cols)
