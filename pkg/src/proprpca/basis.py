"""Thin-plate-spline basis construction and design-matrix assembly.

The design matrix concatenates standardized geographic covariates with a
standardized radial basis phi(r) = r^2 log r centered at space-filling
knots, so smooth spatial surfaces can enter the predictive reducers as
ordinary regression columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import KMeans

from .data import SiteFrame
from .exceptions import (
    CollinearDesign,
    DuplicateKnots,
    SchemaMismatch,
    TooManyKnots,
)

__all__ = [
    "DesignMatrix",
    "select_knots",
    "tps_radial",
    "tps_basis",
    "build_design",
    "eval_design_at",
]

_MAX_ABS_CORR = 0.9999


@dataclass(frozen=True)
class DesignMatrix:
    """Standardized design Z = [covariates | spline basis] plus everything
    needed to evaluate the same columns at new sites."""

    z: np.ndarray
    k: int
    k_tilde: int
    knots: np.ndarray
    covar_means: np.ndarray
    covar_sds: np.ndarray
    spline_means: np.ndarray
    spline_sds: np.ndarray

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def width(self) -> int:
        return self.k + self.k_tilde


def select_knots(coords: np.ndarray, k_tilde: int, seed: int) -> np.ndarray:
    """Pick k_tilde space-filling basis centers by seeded k-means."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    if k_tilde > n:
        raise TooManyKnots(f"k_tilde={k_tilde} exceeds n={n}")
    if k_tilde == 0:
        return np.empty((0, 2))
    if k_tilde == n:
        return coords.copy()
    km = KMeans(n_clusters=k_tilde, random_state=int(seed), n_init=10)
    km.fit(coords)
    centers = km.cluster_centers_
    # canonical order so identical seeds give identical column order
    order = np.lexsort((centers[:, 1], centers[:, 0]))
    return centers[order]


def tps_radial(r):
    """Raw thin-plate radial kernel r^2 log r with the value 0 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    rp = r[pos]
    out[pos] = rp * rp * np.log(rp)
    return out


def _tps_raw(coords: np.ndarray, knots: np.ndarray) -> np.ndarray:
    return tps_radial(cdist(coords, knots))


def _standardize(cols: np.ndarray):
    means = cols.mean(axis=0)
    sds = cols.std(axis=0)
    if (sds == 0).any():
        raise CollinearDesign("design has a constant column")
    return (cols - means) / sds, means, sds


def tps_basis(coords: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Standardized thin-plate basis evaluated at `coords`."""
    knots = np.asarray(knots, dtype=float)
    if np.unique(knots, axis=0).shape[0] != knots.shape[0]:
        raise DuplicateKnots("knots must be distinct")
    std, _, _ = _standardize(_tps_raw(np.asarray(coords, float), knots))
    return std


def build_design(frame: SiteFrame, k_tilde: int, seed: int) -> DesignMatrix:
    """Assemble Z = [covariates | spline columns], all standardized on the
    frame, recording knots and column statistics for later evaluation."""
    if k_tilde < 0:
        raise ValueError("k_tilde must be nonnegative")
    blocks = []
    if frame.k:
        cov_std, cov_m, cov_s = _standardize(frame.covars)
        blocks.append(cov_std)
    else:
        cov_m = np.empty(0)
        cov_s = np.empty(0)
    if k_tilde:
        knots = select_knots(frame.coords, k_tilde, seed)
        if np.unique(knots, axis=0).shape[0] != knots.shape[0]:
            raise DuplicateKnots("k-means produced duplicate knots")
        spl_std, spl_m, spl_s = _standardize(_tps_raw(frame.coords, knots))
        blocks.append(spl_std)
    else:
        knots = np.empty((0, 2))
        spl_m = np.empty(0)
        spl_s = np.empty(0)
    z = np.hstack(blocks) if blocks else np.empty((frame.n, 0))
    _check_collinearity(z)
    return DesignMatrix(
        z=z,
        k=frame.k,
        k_tilde=k_tilde,
        knots=knots,
        covar_means=cov_m,
        covar_sds=cov_s,
        spline_means=spl_m,
        spline_sds=spl_s,
    )


def _check_collinearity(z: np.ndarray) -> None:
    if z.shape[1] < 2:
        return
    corr = np.corrcoef(z, rowvar=False)
    off = np.abs(corr - np.eye(z.shape[1]))
    if np.nanmax(off) >= _MAX_ABS_CORR:
        i, j = np.unravel_index(np.nanargmax(off), off.shape)
        raise CollinearDesign(
            f"columns {i} and {j} are nearly collinear (|corr| >= {_MAX_ABS_CORR})"
        )


def eval_design_at(design: DesignMatrix, new_frame: SiteFrame) -> np.ndarray:
    """Evaluate the training design columns at new sites, reusing the
    training knots and standardization."""
    if new_frame.k != design.k:
        raise SchemaMismatch(
            f"new frame has {new_frame.k} covariates, design expects {design.k}"
        )
    blocks = []
    if design.k:
        blocks.append((new_frame.covars - design.covar_means) / design.covar_sds)
    if design.k_tilde:
        raw = _tps_raw(new_frame.coords, design.knots)
        blocks.append((raw - design.spline_means) / design.spline_sds)
    return np.hstack(blocks) if blocks else np.empty((new_frame.n, 0))
