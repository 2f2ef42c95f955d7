"""The four rank-one dimension-reduction fitters.

All methods share the same outer loop: extract one component from the
current residual matrix, take the per-site score as the projection of the
(model-imputed) residual onto the fitted loading, subtract the rank-one
term from the observed entries, repeat. They differ in how the loading is
estimated:

* plain PCA: alternating least squares on u v' (equivalent to the SVD),
* predictive PCA: the score is constrained to the span of a spatial design,
* spline latent mean: the score IS a design fit Z beta, estimated jointly
  with the loading by least squares over observed entries,
* kriged latent score: the score is a Gaussian process with a covariate
  mean and exponential covariance, estimated by EM.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.optimize import brentq
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator

from .basis import DesignMatrix
from .data import (
    ComponentModel,
    ObservedMatrix,
    ReductionResult,
    SiteFrame,
    center_columns,
)
from .exceptions import (
    CovarianceSingular,
    DimensionMismatch,
    NoConvergenceWarning,
    NotComplete,
    SingularDesign,
)

__all__ = [
    "FitOptions",
    "pca_fit",
    "predpca_fit",
    "proprpca_spline_fit",
    "proprpca_krige_fit",
    "model_impute",
    "krige_posterior",
    "RankOnePCA",
    "PredictivePCA",
    "SplinePPCA",
    "KrigePPCA",
]

_VAR_FLOOR = 1e-30

# lower bound on the latent range, as a fraction of the maximum intersite
# distance; keeps the latent field genuinely spatial (a vanishing range lets
# the Gaussian process imitate iid noise, which the latent score is not
# meant to absorb)
KRIGE_PHI_LOWER_FRAC = 1e-3


@dataclass(frozen=True)
class FitOptions:
    """Shared fitting controls: component count q, per-component iteration
    cap, convergence tolerance on the loading direction, and the ridge used
    only by the predictive-PCA coefficient solve."""

    q: int = 1
    t_max: int = 500
    tol: float = 1e-6
    seed: int = 0
    ridge: float = 1e-8

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


def _canonical_sign(v, *others):
    """Flip signs jointly so the largest-|entry| loading coordinate is
    positive; objectives are invariant to the joint flip."""
    j = int(np.argmax(np.abs(v)))
    if v[j] < 0:
        return (-v,) + tuple(-o if o is not None else None for o in others)
    return (v,) + tuple(others)


def _init_direction(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Leading right singular vector of the mean-imputed residual."""
    if mask.all():
        filled = values
    else:
        counts = mask.sum(axis=0)
        means = np.where(mask, values, 0.0).sum(axis=0) / np.maximum(counts, 1)
        filled = np.where(mask, values, means[None, :])
    _, _, vt = np.linalg.svd(filled, full_matrices=False)
    return vt[0]


def _warn_no_convergence(method: str, component: int, t_max: int) -> None:
    warnings.warn(
        f"{method} component {component + 1} hit t_max={t_max} before tol",
        NoConvergenceWarning,
        stacklevel=3,
    )


# ---------------------------------------------------------------------------
# plain PCA
# ---------------------------------------------------------------------------

def pca_fit(X: ObservedMatrix, opts: FitOptions, diagnostics: dict = None) -> ReductionResult:
    """Sequential rank-one PCA by alternating minimization with deflation.

    Requires complete data; callers impute first. Loadings equal the
    leading right singular directions, scores are the projections X v.
    """
    if not X.is_complete:
        raise NotComplete("pca_fit requires complete data; impute first")
    xc, means = center_columns(X)
    a = xc.values.copy()
    comps = []
    for l in range(opts.q):
        v = _init_direction(a, np.ones_like(a, dtype=bool))
        converged = False
        t = 0
        for t in range(1, opts.t_max + 1):
            u = a @ v
            w = a.T @ u
            nw = np.linalg.norm(w)
            if nw == 0:
                converged = True
                break
            v_new = w / nw
            delta = 1.0 - abs(v @ v_new)
            v = v_new
            if delta < opts.tol:
                converged = True
                break
        if not converged:
            _warn_no_convergence("pca_fit", l, opts.t_max)
        score = a @ v
        v, score = _canonical_sign(v, score)
        resid = a - np.outer(score, v)
        noise = max(np.sum(resid**2) / a.size, _VAR_FLOOR)
        comps.append(
            ComponentModel(
                loading=v,
                score=score,
                coef=None,
                noise_var=noise,
                method_tag="pca",
                converged=converged,
                n_iter=t,
            )
        )
        a = resid
    if diagnostics is not None:
        diagnostics["column_means"] = means
    return ReductionResult(components=tuple(comps), column_means=means, q=opts.q)


# ---------------------------------------------------------------------------
# predictive PCA (score constrained to the design span)
# ---------------------------------------------------------------------------

def _design_array(design) -> np.ndarray:
    if isinstance(design, DesignMatrix):
        return design.z
    return np.asarray(design, dtype=float)


def predpca_fit(
    X: ObservedMatrix, Z, opts: FitOptions, diagnostics: dict = None
) -> ReductionResult:
    """Predictive PCA: minimize ||X - (Z a / ||Z a||) v'||_F^2 per component.

    Alternates the loading update v = X'u / ||X'u|| (u the unit-norm design
    fit) with the coefficient update a = (Z'Z + ridge I)^-1 Z'X v, then
    stores the projection score u = X_l v_l and deflates.
    """
    if not X.is_complete:
        raise NotComplete("predpca_fit requires complete data; impute first")
    z = _design_array(Z)
    if z.shape[0] != X.n:
        raise DimensionMismatch(f"design has {z.shape[0]} rows, X has {X.n}")
    xc, means = center_columns(X)
    a = xc.values.copy()
    ztz = z.T @ z + opts.ridge * np.eye(z.shape[1])
    try:
        ztz_f = cho_factor(ztz)
    except np.linalg.LinAlgError as err:
        raise SingularDesign("Z'Z + ridge*I is not positive definite") from err

    comps = []
    traces = []
    for l in range(opts.q):
        v = _init_direction(a, np.ones_like(a, dtype=bool))
        alpha = cho_solve(ztz_f, z.T @ (a @ v))
        total_ss = np.sum(a**2)
        obj_trace = []
        converged = False
        t = 0
        for t in range(1, opts.t_max + 1):
            w = z @ alpha
            nw = np.linalg.norm(w)
            if nw == 0:
                raise SingularDesign("Z alpha collapsed to zero")
            u_c = w / nw
            vt = a.T @ u_c
            obj_trace.append(total_ss - vt @ vt)
            nv = np.linalg.norm(vt)
            if nv == 0:
                converged = True
                break
            v_new = vt / nv
            alpha = cho_solve(ztz_f, z.T @ (a @ v_new))
            delta = 1.0 - abs(v @ v_new)
            v = v_new
            if delta < opts.tol:
                converged = True
                break
        if not converged:
            _warn_no_convergence("predpca_fit", l, opts.t_max)
        score = a @ v
        v, score, alpha = _canonical_sign(v, score, alpha)
        noise = max(obj_trace[-1] / a.size, _VAR_FLOOR) if obj_trace else _VAR_FLOOR
        comps.append(
            ComponentModel(
                loading=v,
                score=score,
                coef=alpha,
                noise_var=noise,
                method_tag="predpca",
                converged=converged,
                n_iter=t,
            )
        )
        traces.append(obj_trace)
        a = a - np.outer(score, v)
    if diagnostics is not None:
        diagnostics["objective_traces"] = traces
    return ReductionResult(components=tuple(comps), column_means=means, q=opts.q)


# ---------------------------------------------------------------------------
# spline latent mean
# ---------------------------------------------------------------------------

def _fit_spline_component_complete(a, z, ztz_f, opts):
    n, p = a.shape
    v = _init_direction(a, np.ones_like(a, dtype=bool))
    beta = cho_solve(ztz_f, z.T @ (a @ v))
    gamma2_trace = []
    converged = False
    t = 0
    for t in range(1, opts.t_max + 1):
        w = z @ beta
        nw2 = w @ w
        if nw2 == 0:
            raise SingularDesign("Z beta collapsed to zero")
        vt = a.T @ w / nw2
        v_new = vt / np.linalg.norm(vt)
        beta = cho_solve(ztz_f, z.T @ (a @ v_new))
        gamma2 = np.sum((a - np.outer(z @ beta, v_new)) ** 2) / (n * p)
        gamma2_trace.append(gamma2)
        delta = 1.0 - abs(v @ v_new)
        v = v_new
        if delta < opts.tol:
            converged = True
            break
    return v, beta, max(gamma2_trace[-1], _VAR_FLOOR), converged, t, gamma2_trace


def _fit_spline_component_masked(values, mask, z, opts):
    """Observed-entries alternating least squares; reduces exactly to the
    complete-data updates when the mask is all True."""
    nobs = mask.sum()
    a0 = np.where(mask, values, 0.0)
    v = _init_direction(values, mask)
    beta = _spline_beta(a0, mask, z, v)
    gamma2_trace = []
    converged = False
    t = 0
    for t in range(1, opts.t_max + 1):
        w = z @ beta
        num = a0.T @ w
        den = mask.T @ (w * w)
        if (den == 0).any():
            raise SingularDesign("a column has no observed overlap with Z beta")
        vt = num / den
        v_new = vt / np.linalg.norm(vt)
        beta = _spline_beta(a0, mask, z, v_new)
        w = z @ beta
        rss = np.sum((a0 - np.outer(w, v_new))[mask] ** 2)
        gamma2 = rss / nobs
        gamma2_trace.append(gamma2)
        delta = 1.0 - abs(v @ v_new)
        v = v_new
        if delta < opts.tol:
            converged = True
            break
    return v, beta, max(gamma2_trace[-1], _VAR_FLOOR), converged, t, gamma2_trace


def _spline_beta(a0, mask, z, v):
    """Weighted least squares for beta in min sum_obs (x_ij - v_j (Z b)_i)^2."""
    d = mask @ (v * v)
    b = a0 @ v
    g = z.T @ (d[:, None] * z)
    try:
        return cho_solve(cho_factor(g), z.T @ b)
    except np.linalg.LinAlgError as err:
        raise SingularDesign("weighted normal equations are singular") from err


def proprpca_spline_fit(
    X: ObservedMatrix, Z, opts: FitOptions, diagnostics: dict = None
) -> ReductionResult:
    """Probabilistic predictive PCA with a deterministic spline latent mean,
    X_l = (Z beta_l) v_l' + E_l. Handles complete and missing data."""
    z = _design_array(Z)
    if z.shape[0] != X.n:
        raise DimensionMismatch(f"design has {z.shape[0]} rows, X has {X.n}")
    xc, means = center_columns(X)
    complete = X.is_complete
    if complete:
        try:
            ztz_f = cho_factor(z.T @ z)
        except np.linalg.LinAlgError as err:
            raise SingularDesign("Z'Z is not positive definite") from err

    values = xc.values.copy()
    mask = xc.mask.copy()
    comps = []
    traces = []
    for l in range(opts.q):
        if complete:
            v, beta, gamma2, converged, t, tr = _fit_spline_component_complete(
                values, z, ztz_f, opts
            )
        else:
            v, beta, gamma2, converged, t, tr = _fit_spline_component_masked(
                values, mask, z, opts
            )
        if not converged:
            _warn_no_convergence("proprpca_spline_fit", l, opts.t_max)
        latent = z @ beta
        filled = np.where(mask, values, latent[:, None] * v[None, :])
        score = filled @ v
        v, score, beta, latent = _canonical_sign(v, score, beta, latent)
        comps.append(
            ComponentModel(
                loading=v,
                score=score,
                coef=beta,
                noise_var=gamma2,
                method_tag="proprpca_spline",
                converged=converged,
                n_iter=t,
            )
        )
        traces.append(tr)
        values = values - np.outer(score, v)
    if diagnostics is not None:
        diagnostics["gamma2_traces"] = traces
    return ReductionResult(components=tuple(comps), column_means=means, q=opts.q)


# ---------------------------------------------------------------------------
# kriged latent score (EM)
# ---------------------------------------------------------------------------

def _chol_psd(mat: np.ndarray, overwrite: bool = False):
    """Cholesky with one jitter retry (+1e-8 on the diagonal)."""
    try:
        return cho_factor(mat, lower=True, overwrite_a=overwrite, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return cho_factor(
            mat + 1e-8 * np.eye(mat.shape[0]), lower=True, check_finite=False
        )
    except np.linalg.LinAlgError as err:
        raise CovarianceSingular("covariance not positive definite after jitter") from err


def krige_posterior(values0, mask, v, prior_mean, prior_cov, gamma2):
    """Gaussian posterior (mean, covariance) of the latent score given the
    observed entries of the current residual.

    `values0` must be zero-filled at unobserved positions. Row i of the
    residual contributes a precision d_i / gamma2 with d_i the sum of v_j^2
    over that row's observed columns.
    """
    n = prior_cov.shape[0]
    d = mask @ (v * v)
    b = values0 @ v
    eye = np.eye(n)
    l_sig = _chol_psd(prior_cov)
    sig_inv = cho_solve(l_sig, eye, check_finite=False)
    a_mat = sig_inv + np.diag(d / gamma2)
    l_a = _chol_psd(a_mat, overwrite=True)
    s = cho_solve(l_a, eye, check_finite=False)
    s = 0.5 * (s + s.T)
    m = s @ (sig_inv @ prior_mean + b / gamma2)
    return m, s


def _constrained_unit_ls(c, a):
    """Minimize sum_j a_j v_j^2 - 2 c_j v_j subject to ||v|| = 1 (a_j > 0).

    Solution v_j = c_j / (a_j + lam) where lam solves the secular equation
    sum c_j^2/(a_j+lam)^2 = 1. Coincides with c/||c|| when all a_j are
    equal, which is the complete-data update.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    scale = a.max()
    if scale <= 0:
        raise ValueError("a must be positive")
    if np.ptp(a) <= 1e-12 * scale:
        nc = np.linalg.norm(c)
        if nc == 0:
            return None
        return c / nc
    if not np.any(c):
        return None

    def phi(lam):
        return np.sum((c / (a + lam)) ** 2) - 1.0

    amin = a.min()
    lo = -amin + 1e-14 * scale
    if phi(lo) < 0:
        # hard case: no mass on the smallest-a coordinates; park the
        # leftover norm there
        lam = -amin
        denom = a + lam
        v = np.where(denom > 0, c / np.where(denom > 0, denom, 1.0), 0.0)
        shortfall = 1.0 - v @ v
        j = int(np.argmin(a))
        v[j] = np.sqrt(max(shortfall, 0.0))
        return v / np.linalg.norm(v)
    hi = lo + scale
    while phi(hi) > 0:
        hi = lo + (hi - lo) * 4.0
    lam = brentq(phi, lo, hi, xtol=1e-14 * scale, rtol=8.9e-16)
    v = c / (a + lam)
    return v / np.linalg.norm(v)


def _xi_profile_objective(log_phi, dist, r_design, m, s_chol_lower, n):
    """Latent-field part of the expected complete-data log-likelihood with
    the partial sill profiled out and the mean coefficients GLS-solved."""
    phi = np.exp(log_phi)
    k = np.exp(dist * (-1.0 / phi))
    l_k = _chol_psd(k, overwrite=True)
    logdet = 2.0 * np.sum(np.log(np.diag(l_k[0]).clip(min=1e-300)))
    rhs = np.column_stack([r_design, m])
    ki = cho_solve(l_k, rhs, check_finite=False)
    ki_r, ki_m = ki[:, :-1], ki[:, -1]
    g = r_design.T @ ki_r
    gm = r_design.T @ ki_m
    beta = np.linalg.lstsq(g, gm, rcond=None)[0]
    quad = m @ ki_m - 2.0 * beta @ gm + beta @ (g @ beta)
    half = solve_triangular(l_k[0], s_chol_lower, lower=True, check_finite=False)
    tr_term = np.sum(half * half)
    a_tot = max(quad + tr_term, 1e-12)
    sigma2 = a_tot / n
    obj = -0.5 * (n * np.log(sigma2) + logdet + n)
    return obj, beta, sigma2


def _phi_search(state, dist, r_design, m, s_chol_lower, n, bounds):
    """One monotone pattern-search step on log(range): evaluate the profiled
    objective at the previous range and a shrinking geometric neighborhood,
    expanding while the edge keeps winning."""
    lo, hi = np.log(bounds[0]), np.log(bounds[1])
    cache = {}

    def ev(lp):
        lp = min(max(lp, lo), hi)
        if lp not in cache:
            cache[lp] = _xi_profile_objective(lp, dist, r_design, m, s_chol_lower, n)
        return lp, cache[lp]

    step = state["step"]
    center_lp, best = ev(np.log(state["phi"]))
    best_lp = center_lp
    for direction in (1.0, -1.0):
        lp, res = ev(center_lp + direction * step)
        while res[0] > best[0] + 1e-12:
            best_lp, best = lp, res
            nlp, nres = ev(lp + direction * step)
            if nlp == lp:  # clipped at a bound
                break
            lp, res = nlp, nres
    if best_lp == center_lp:
        state["step"] = max(step * 0.5, 0.02)
    state["phi"] = float(np.exp(best_lp))
    obj, beta, sigma2 = best
    return obj, beta, sigma2


def proprpca_krige_fit(
    X: ObservedMatrix, frame: SiteFrame, opts: FitOptions, diagnostics: dict = None
) -> ReductionResult:
    """Probabilistic predictive PCA with a kriged latent score.

    Per component l the model is X_l = u v' + E with u = R beta + eta,
    eta a zero-mean Gaussian field with exponential covariance (no nugget)
    over the site coordinates, and iid noise E. Parameters are estimated by
    EM: the E-step conditions the latent score on the observed residual
    entries, the M-step updates (v, gamma2) in closed form and (beta, sill,
    range) through a profiled likelihood search on the range. The latent
    mean design is an intercept plus the standardized frame covariates.
    """
    if X.n != frame.n:
        raise DimensionMismatch(f"X has {X.n} rows, frame has {frame.n}")
    xc, means = center_columns(X)
    values = xc.values.copy()
    mask = xc.mask.copy()
    n = X.n
    nobs = mask.sum()

    r_design = np.ones((n, 1))
    if frame.k:
        cov = frame.covars
        sds = cov.std(axis=0)
        if (sds == 0).any():
            raise SingularDesign("constant covariate column in frame")
        r_design = np.hstack([r_design, (cov - cov.mean(axis=0)) / sds])

    dist = cdist(frame.coords, frame.coords)
    maxd = dist.max()
    phi_bounds = (KRIGE_PHI_LOWER_FRAC * maxd, 10.0 * maxd)
    phi_init = float(np.median(pdist(frame.coords)))

    comps = []
    param_traces = []
    for l in range(opts.q):
        a0 = np.where(mask, values, 0.0)
        v = _init_direction(values, mask)
        counts = mask.sum(axis=0)
        col_means = np.where(mask, values, 0.0).sum(axis=0) / counts
        filled0 = np.where(mask, values, col_means[None, :])
        u0 = filled0 @ v
        beta = np.linalg.lstsq(r_design, u0, rcond=None)[0]
        gamma2 = max(np.mean((a0 - np.outer(u0, v))[mask] ** 2), _VAR_FLOOR)
        sigma2_eta = max(np.var(u0), _VAR_FLOOR)
        phi = min(max(phi_init, phi_bounds[0]), phi_bounds[1])
        state = {"phi": phi, "step": 0.7}

        trace = [
            {
                "v": v.copy(),
                "beta": beta.copy(),
                "gamma2": gamma2,
                "sigma2_eta": sigma2_eta,
                "phi": phi,
            }
        ]
        converged = False
        t = 0
        m = np.zeros(n)
        for t in range(1, opts.t_max + 1):
            sigma = sigma2_eta * np.exp(-dist / state["phi"])
            m, s = krige_posterior(a0, mask, v, r_design @ beta, sigma, gamma2)

            c = a0.T @ m
            a_col = mask.T @ (m * m + np.diag(s))
            v_new = _constrained_unit_ls(c, a_col)
            if v_new is None:
                v_new = v
            d_new = mask @ (v_new * v_new)
            rss = np.sum((a0 - np.outer(m, v_new))[mask] ** 2)
            gamma2 = max((rss + d_new @ np.diag(s)) / nobs, _VAR_FLOOR)

            s_chol = np.linalg.cholesky(s + 1e-12 * np.trace(s) / n * np.eye(n))
            _, beta, sigma2_eta = _phi_search(
                state, dist, r_design, m, s_chol, n, phi_bounds
            )
            sigma2_eta = max(sigma2_eta, _VAR_FLOOR)

            delta = 1.0 - abs(v @ v_new)
            v = v_new
            trace.append(
                {
                    "v": v.copy(),
                    "beta": beta.copy(),
                    "gamma2": gamma2,
                    "sigma2_eta": sigma2_eta,
                    "phi": state["phi"],
                }
            )
            if delta < opts.tol:
                converged = True
                break
        if not converged:
            _warn_no_convergence("proprpca_krige_fit", l, opts.t_max)

        filled = np.where(mask, values, np.outer(m, v))
        score = filled @ v
        v, score, beta, m = _canonical_sign(v, score, beta, m)
        comps.append(
            ComponentModel(
                loading=v,
                score=score,
                coef=beta,
                noise_var=gamma2,
                method_tag="proprpca_krige",
                spatial_params=(sigma2_eta, state["phi"]),
                converged=converged,
                n_iter=t,
            )
        )
        param_traces.append(trace)
        values = values - np.outer(score, v)
    if diagnostics is not None:
        diagnostics["param_traces"] = param_traces
        diagnostics["r_design"] = r_design
        diagnostics["dist"] = dist
    return ReductionResult(components=tuple(comps), column_means=means, q=opts.q)


def model_impute(X: ObservedMatrix, comp: ComponentModel, latent_mean: np.ndarray) -> np.ndarray:
    """Fill unobserved cells of X with latent_mean_i * v_j; observed cells
    keep their values."""
    latent_mean = np.asarray(latent_mean, dtype=float)
    if latent_mean.shape != (X.n,):
        raise DimensionMismatch(f"latent_mean has shape {latent_mean.shape}, expected ({X.n},)")
    if comp.loading.shape != (X.p,):
        raise DimensionMismatch(f"loading has shape {comp.loading.shape}, expected ({X.p},)")
    return np.where(X.mask, X.values, np.outer(latent_mean, comp.loading))


# ---------------------------------------------------------------------------
# estimator wrappers
# ---------------------------------------------------------------------------

class _BaseReducer(BaseEstimator):
    """Shared fit bookkeeping and projection transform."""

    def __init__(self, n_components=1, max_iter=500, tol=1e-6, random_state=0):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _opts(self, **extra) -> FitOptions:
        return FitOptions(
            q=self.n_components,
            t_max=self.max_iter,
            tol=self.tol,
            seed=self.random_state,
            **extra,
        )

    def _store(self, result: ReductionResult):
        self.result_ = result
        self.components_ = result.loadings.T
        self.scores_ = result.scores
        self.column_means_ = result.column_means
        self.converged_ = result.converged
        return self

    def transform(self, X) -> np.ndarray:
        """Sequential deflation projection of new complete data onto the
        fitted loadings (scores at the new sites)."""
        if not hasattr(self, "result_"):
            raise AttributeError("fit before transform")
        x = X.values if isinstance(X, ObservedMatrix) else np.asarray(X, dtype=float)
        if np.isnan(x).any():
            raise NotComplete("transform requires complete data")
        a = x - self.column_means_[None, :]
        scores = np.empty((a.shape[0], self.result_.q))
        for l, comp in enumerate(self.result_.components):
            scores[:, l] = a @ comp.loading
            a = a - np.outer(scores[:, l], comp.loading)
        return scores

    def fit_transform(self, X, *args, **kwargs) -> np.ndarray:
        self.fit(X, *args, **kwargs)
        return self.scores_


class RankOnePCA(_BaseReducer):
    """Plain PCA via rank-one alternating minimization with deflation."""

    def fit(self, X, y=None):
        x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
        self.diagnostics_ = {}
        return self._store(pca_fit(x, self._opts(), self.diagnostics_))


class PredictivePCA(_BaseReducer):
    """Predictive PCA: per-component scores constrained to a spatial design."""

    def __init__(self, n_components=1, max_iter=500, tol=1e-6, random_state=0, ridge=1e-8):
        super().__init__(n_components, max_iter, tol, random_state)
        self.ridge = ridge

    def fit(self, X, design, y=None):
        x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
        self.diagnostics_ = {}
        return self._store(
            predpca_fit(x, design, self._opts(ridge=self.ridge), self.diagnostics_)
        )


class SplinePPCA(_BaseReducer):
    """Probabilistic predictive PCA with a spline latent mean; accepts
    missing entries directly."""

    def fit(self, X, design, y=None):
        x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
        self.diagnostics_ = {}
        return self._store(
            proprpca_spline_fit(x, design, self._opts(), self.diagnostics_)
        )


class KrigePPCA(_BaseReducer):
    """Probabilistic predictive PCA with a kriged latent score; accepts
    missing entries directly."""

    def fit(self, X, frame, y=None):
        x = X if isinstance(X, ObservedMatrix) else ObservedMatrix(X)
        self.diagnostics_ = {}
        return self._store(
            proprpca_krige_fit(x, frame, self._opts(), self.diagnostics_)
        )
