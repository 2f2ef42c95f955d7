"""Core data model: partially observed pollutant matrices, site geometry, and
the rank-one component bookkeeping shared by every reducer.

Missing entries are stored as NaN but the public contract is mask-driven:
no consumer may read a value where the mask is False.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatch, UnidentifiableColumn

__all__ = [
    "ObservedMatrix",
    "SiteFrame",
    "ComponentModel",
    "ReductionResult",
    "center_columns",
    "deflate",
    "project_scores",
]


class ObservedMatrix:
    """An n x p value matrix paired with a boolean observation mask.

    Parameters
    ----------
    values : (n, p) array_like
        Pollutant values. Entries at unobserved positions are ignored (they
        are stored as NaN internally regardless of what was passed).
    mask : (n, p) array_like of bool, optional
        True where observed. Defaults to ``~isnan(values)``.

    Raises
    ------
    UnidentifiableColumn
        If any column has fewer than 2 observed entries.
    ValueError
        If shapes disagree, a row has no observed entry, or an observed
        value is non-finite.
    """

    __slots__ = ("_values", "_mask")

    def __init__(self, values, mask=None):
        values = np.array(values, dtype=float)
        if values.ndim != 2:
            raise DimensionMismatch(f"values must be 2-D, got shape {values.shape}")
        if mask is None:
            mask = ~np.isnan(values)
        mask = np.array(mask, dtype=bool)
        if mask.shape != values.shape:
            raise DimensionMismatch(
                f"mask shape {mask.shape} != values shape {values.shape}"
            )
        col_counts = mask.sum(axis=0)
        bad = np.where(col_counts < 2)[0]
        if bad.size:
            raise UnidentifiableColumn(
                f"columns {bad.tolist()} have fewer than 2 observed entries"
            )
        if not mask.any(axis=1).all():
            rows = np.where(~mask.any(axis=1))[0]
            raise ValueError(f"rows {rows.tolist()} have no observed entries")
        if not np.isfinite(values[mask]).all():
            raise ValueError("observed entries must be finite")
        values[~mask] = np.nan
        values.flags.writeable = False
        mask.flags.writeable = False
        self._values = values
        self._mask = mask

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def n(self) -> int:
        return self._values.shape[0]

    @property
    def p(self) -> int:
        return self._values.shape[1]

    @property
    def is_complete(self) -> bool:
        return bool(self._mask.all())

    @property
    def n_observed(self) -> int:
        return int(self._mask.sum())

    def filled(self, fill: float = 0.0) -> np.ndarray:
        """Dense copy with unobserved entries replaced by `fill`."""
        out = self._values.copy()
        out[~self._mask] = fill
        return out

    def zero_filled(self) -> np.ndarray:
        return self.filled(0.0)

    def take_rows(self, index) -> "ObservedMatrix":
        """Row subset as a new matrix (revalidated)."""
        index = np.asarray(index)
        return ObservedMatrix(self._values[index].copy(), self._mask[index].copy())

    def __repr__(self) -> str:  # pragma: no cover
        return f"ObservedMatrix(n={self.n}, p={self.p}, observed={self.n_observed})"


class SiteFrame:
    """Spatial coordinates and geographic covariates per site."""

    __slots__ = ("_coords", "_covars")

    def __init__(self, coords, covars=None):
        coords = np.array(coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise DimensionMismatch(f"coords must be (n, 2), got {coords.shape}")
        if not np.isfinite(coords).all():
            raise ValueError("coordinates must be finite")
        uniq = np.unique(coords, axis=0)
        if uniq.shape[0] != coords.shape[0]:
            raise ValueError("duplicate site coordinates are not allowed")
        if covars is None:
            covars = np.empty((coords.shape[0], 0), dtype=float)
        covars = np.array(covars, dtype=float)
        if covars.ndim == 1:
            covars = covars[:, None]
        if covars.shape[0] != coords.shape[0]:
            raise DimensionMismatch(
                f"covars has {covars.shape[0]} rows, coords has {coords.shape[0]}"
            )
        if covars.size and not np.isfinite(covars).all():
            raise ValueError("covariates must be finite")
        coords.flags.writeable = False
        covars.flags.writeable = False
        self._coords = coords
        self._covars = covars

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def covars(self) -> np.ndarray:
        return self._covars

    @property
    def n(self) -> int:
        return self._coords.shape[0]

    @property
    def k(self) -> int:
        return self._covars.shape[1]

    def take_rows(self, index) -> "SiteFrame":
        index = np.asarray(index)
        return SiteFrame(self._coords[index].copy(), self._covars[index].copy())

    def __repr__(self) -> str:  # pragma: no cover
        return f"SiteFrame(n={self.n}, k={self.k})"


_UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class ComponentModel:
    """One extracted principal component.

    `loading` is the unit direction over pollutants, `score` the per-site
    component value at the training sites (projection convention), `coef`
    the latent-mean coefficients of whichever design drove the fit, and
    `spatial_params` the latent covariance (partial sill, range) for the
    kriged variant only.
    """

    loading: np.ndarray
    score: np.ndarray
    coef: Optional[np.ndarray]
    noise_var: float
    method_tag: str
    spatial_params: Optional[tuple] = None
    converged: bool = True
    n_iter: int = 0

    def __post_init__(self):
        loading = np.asarray(self.loading, dtype=float)
        score = np.asarray(self.score, dtype=float)
        if abs(np.linalg.norm(loading) - 1.0) > _UNIT_NORM_TOL:
            raise ValueError("loading must have unit norm")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")
        object.__setattr__(self, "loading", loading)
        object.__setattr__(self, "score", score)
        if self.coef is not None:
            object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float))


@dataclass(frozen=True)
class ReductionResult:
    """Ordered components from one fit plus the centering offsets."""

    components: tuple
    column_means: np.ndarray
    q: int

    def __post_init__(self):
        if len(self.components) != self.q:
            raise ValueError(
                f"expected {self.q} components, got {len(self.components)}"
            )
        object.__setattr__(
            self, "column_means", np.asarray(self.column_means, dtype=float)
        )

    @property
    def loadings(self) -> np.ndarray:
        """p x q loading matrix, columns in extraction order."""
        return np.column_stack([c.loading for c in self.components])

    @property
    def scores(self) -> np.ndarray:
        """n x q training-score matrix."""
        return np.column_stack([c.score for c in self.components])

    @property
    def converged(self) -> bool:
        return all(c.converged for c in self.components)


def center_columns(x: ObservedMatrix):
    """Subtract each column's observed-entry mean from its observed entries.

    Returns the centered matrix and the mean vector. The mask is unchanged.
    """
    mask = x.mask
    vals = x.values.copy()
    counts = mask.sum(axis=0)
    sums = np.where(mask, vals, 0.0).sum(axis=0)
    means = sums / counts
    vals = vals - means[None, :]
    return ObservedMatrix(vals, mask.copy()), means


def deflate(x: ObservedMatrix, u: np.ndarray, v: np.ndarray) -> ObservedMatrix:
    """Remove the rank-one term u v' from the observed entries."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (x.n,) or v.shape != (x.p,):
        raise DimensionMismatch(
            f"u has shape {u.shape}, v has shape {v.shape}; expected ({x.n},), ({x.p},)"
        )
    vals = x.values - np.outer(u, v)
    return ObservedMatrix(vals, x.mask.copy())


def project_scores(x_filled: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project a complete (model-imputed) matrix onto a unit loading."""
    x_filled = np.asarray(x_filled, dtype=float)
    v = np.asarray(v, dtype=float)
    if x_filled.ndim != 2 or v.shape != (x_filled.shape[1],):
        raise DimensionMismatch(
            f"x has shape {x_filled.shape}, v has shape {v.shape}"
        )
    if np.isnan(x_filled).any():
        raise ValueError("x_filled must not contain missing entries")
    return x_filled @ v
