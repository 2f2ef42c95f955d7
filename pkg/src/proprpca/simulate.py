"""Seeded generators for the simulation studies.

Multi-pollutant surfaces live on a unit-spaced square grid; each replicate
draws disjoint training and testing sites and generates fields only at the
selected sites (exact marginal law via Cholesky of the selected-site
covariance). Rows of every generated matrix are ordered training sites
first, then testing sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import ObservedMatrix, SiteFrame
from .exceptions import CovarianceSingular

__all__ = [
    "ScenarioConfig",
    "gen_grid",
    "sample_gaussian_field",
    "gen_three_pollutant",
    "gen_high_dim",
    "apply_mcar",
    "apply_mar_3d",
    "apply_mar_hd",
    "split_train_test",
    "parse_missing",
]

SCENARIO_KINDS = (
    "three_pollutant_corr",
    "three_pollutant_indep",
    "high_dim_s1",
    "high_dim_s2",
)

# three-pollutant noise field
NOISE_SILL = 3.5**2
NOISE_NUGGET = 1.0
NOISE_RANGE = 50.0

# 15-pollutant construction: latent scores u1 (covariates + smooth field),
# u2 (covariate + rough field), u3 (pure noise), five pollutants per block.
# The first covariate is itself a smooth spatial field, like a real GIS
# variable, so covariate-driven missingness carves spatial patches; the
# other two stay iid so the latent scores mix little across replicates.
HD_P = 15
HD_BLOCK = 5
HD_COVAR_RANGE = 30.0
HD_SMOOTH_RANGE = 50.0
HD_ROUGH_RANGE = 6.0
HD_U1_COEFS = (1.0, 0.8)     # r1, r2
HD_U1_FIELD_SD = 1.4
HD_U2_COEF = 1.0             # r3
HD_U2_FIELD_SD = 1.0
HD_NOISE_SD = 1.1
HD_VARIANCES = {
    "high_dim_s1": (10.0, 7.5, 5.0),
    "high_dim_s2": (7.5, 5.0, 10.0),
}
_W_RAW = np.array(
    [
        [1.0, 1.0, 1.0, 1.0, 1.0],
        [1.2, 1.1, 1.0, 0.9, 0.8],
        [0.8, 0.9, 1.0, 1.1, 1.2],
    ]
)
HD_BLOCK_LOADINGS = _W_RAW / np.linalg.norm(_W_RAW, axis=1, keepdims=True)

# missing-at-random settings; the high-dimensional block-1 rule is driven by
# how extreme (two-sided) the first covariate is, which suppresses the
# observed variance of the most predictable latent score
MAR3D_QUANTILE = 0.80
MAR3D_MCAR_RATE = 0.20
MARHD_QUANTILE = 0.70
MARHD_HIGH_RATE = 0.92
MARHD_LOW_RATE = 0.05
MARHD_TAIL_RATE = 0.20


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    grid_size: int = 100
    n_train: int = 400
    n_test: int = 100
    missing: str = "complete"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.n_train + self.n_test > self.grid_size**2:
            raise ValueError("n_train + n_test exceeds the grid size")
        parse_missing(self.missing)

    @property
    def n_sites(self) -> int:
        return self.n_train + self.n_test


def parse_missing(spec: str):
    """Parse 'complete', 'mcar:<rate>', or 'mar' into (mode, rate)."""
    if spec == "complete":
        return "complete", 0.0
    if spec == "mar":
        return "mar", None
    if spec.startswith("mcar:"):
        rate = float(spec.split(":", 1)[1])
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"mcar rate must be in [0, 1), got {rate}")
        return "mcar", rate
    raise ValueError(f"unknown missing spec {spec!r}")


def gen_grid(side: int) -> np.ndarray:
    """Unit-spaced integer lattice, x varying fastest."""
    if side < 2:
        raise ValueError("side must be >= 2")
    x, y = np.meshgrid(np.arange(side, dtype=float), np.arange(side, dtype=float))
    return np.column_stack([x.ravel(), y.ravel()])


def split_train_test(n_total: int, n_train: int, n_test: int, seed) -> tuple:
    """Disjoint uniformly random index sets, deterministic per seed."""
    if n_train + n_test > n_total:
        raise ValueError("n_train + n_test exceeds n_total")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_total)
    return perm[:n_train], perm[n_train : n_train + n_test]


def sample_gaussian_field(coords, sill, range_, nugget, rng) -> np.ndarray:
    """One zero-mean Gaussian field realization at the given sites."""
    d = cdist(coords, coords)
    cov = sill * np.exp(-d / range_)
    if nugget:
        cov[np.diag_indices_from(cov)] += nugget
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(cov + 1e-8 * sill * np.eye(len(coords)))
        except np.linalg.LinAlgError as err:
            raise CovarianceSingular("field covariance not positive definite") from err
    return chol @ rng.standard_normal(len(coords))


def _selected_sites(cfg: ScenarioConfig, rng):
    grid = gen_grid(cfg.grid_size)
    train_idx, test_idx = split_train_test(len(grid), cfg.n_train, cfg.n_test, rng)
    sel = np.concatenate([train_idx, test_idx])
    return grid[sel]


def gen_three_pollutant(cfg: ScenarioConfig, include_noise: bool = True):
    """Three correlated pollutant surfaces driven by three iid standard
    normal covariates, of which only the first is exposed as observed.

    x1 = 4 r1 + 2 r3 + e1, x2 = 3 r2 + e2, x3 = 2 r1 + 4 r2 + e3; the
    noise fields are spatially correlated (corr variant) or iid standard
    normal (indep variant). `include_noise=False` zeroes the noise (test
    hook)."""
    if cfg.kind not in ("three_pollutant_corr", "three_pollutant_indep"):
        raise ValueError(f"not a three-pollutant scenario: {cfg.kind}")
    rng = np.random.default_rng(cfg.seed)
    coords = _selected_sites(cfg, rng)
    m = len(coords)
    r1, r2, r3 = rng.standard_normal((3, m))
    if include_noise:
        if cfg.kind == "three_pollutant_corr":
            eps = np.column_stack(
                [
                    sample_gaussian_field(coords, NOISE_SILL, NOISE_RANGE, NOISE_NUGGET, rng)
                    for _ in range(3)
                ]
            )
        else:
            eps = rng.standard_normal((m, 3))
    else:
        eps = np.zeros((m, 3))
    x = np.column_stack(
        [
            4 * r1 + 2 * r3 + eps[:, 0],
            3 * r2 + eps[:, 1],
            2 * r1 + 4 * r2 + eps[:, 2],
        ]
    )
    return ObservedMatrix(x), SiteFrame(coords, r1[:, None])


def gen_high_dim(cfg: ScenarioConfig, include_noise: bool = True):
    """Fifteen pollutants built from three latent scores with sparse block
    loadings; returns (matrix, frame, true latent scores).

    u1 mixes two covariates with a long-range field (most predictable), u2
    one covariate with a short-range field, u3 is iid noise (unpredictable).
    Each score is rescaled so its sample variance hits the scenario target.
    All three covariates are exposed in the frame."""
    if cfg.kind not in HD_VARIANCES:
        raise ValueError(f"not a high-dimensional scenario: {cfg.kind}")
    targets = HD_VARIANCES[cfg.kind]
    rng = np.random.default_rng(cfg.seed)
    coords = _selected_sites(cfg, rng)
    m = len(coords)
    r1 = sample_gaussian_field(coords, 1.0, HD_COVAR_RANGE, 0.0, rng)
    r2, r3 = rng.standard_normal((2, m))
    g_smooth = sample_gaussian_field(coords, HD_U1_FIELD_SD**2, HD_SMOOTH_RANGE, 0.0, rng)
    g_rough = sample_gaussian_field(coords, HD_U2_FIELD_SD**2, HD_ROUGH_RANGE, 0.0, rng)
    raw = np.column_stack(
        [
            HD_U1_COEFS[0] * r1 + HD_U1_COEFS[1] * r2 + g_smooth,
            HD_U2_COEF * r3 + g_rough,
            rng.standard_normal(m),
        ]
    )
    scales = np.sqrt(np.asarray(targets) / raw.var(axis=0, ddof=1))
    scores = raw * scales
    x = np.zeros((m, HD_P))
    for l in range(3):
        block = slice(l * HD_BLOCK, (l + 1) * HD_BLOCK)
        x[:, block] = np.outer(scores[:, l], HD_BLOCK_LOADINGS[l])
    if include_noise:
        x = x + HD_NOISE_SD * rng.standard_normal((m, HD_P))
    frame = SiteFrame(coords, np.column_stack([r1, r2, r3]))
    return ObservedMatrix(x), frame, scores


def _enforce_identifiable(mask: np.ndarray, rng) -> np.ndarray:
    """Unmask cells until every column has >= 2 and every row >= 1 observed
    entries; deterministic given the generator state."""
    mask = mask.copy()
    for j in np.where(mask.sum(axis=0) < 2)[0]:
        hidden = np.where(~mask[:, j])[0]
        need = 2 - int(mask[:, j].sum())
        pick = rng.choice(hidden, size=need, replace=False)
        mask[pick, j] = True
    for i in np.where(~mask.any(axis=1))[0]:
        j = int(rng.integers(mask.shape[1]))
        mask[i, j] = True
    return mask


def apply_mcar(X: ObservedMatrix, rate: float, seed) -> ObservedMatrix:
    """Mask each entry independently with the given probability; violating
    rows/columns are resampled (then unmasked as a last resort) so every
    column keeps >= 2 and every row >= 1 observed entries."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate must be in [0, 1)")
    if rate == 0.0:
        return X
    rng = np.random.default_rng(seed)
    base = X.mask
    mask = base & ~(rng.random(X.values.shape) < rate)
    for _ in range(10):
        bad_cols = np.where(mask.sum(axis=0) < 2)[0]
        for j in bad_cols:
            for _ in range(100):
                col = base[:, j] & ~(rng.random(X.n) < rate)
                if col.sum() >= 2:
                    mask[:, j] = col
                    break
        bad_rows = np.where(~mask.any(axis=1))[0]
        for i in bad_rows:
            for _ in range(100):
                row = base[i] & ~(rng.random(X.p) < rate)
                if row.any():
                    mask[i] = row
                    break
        if not bad_cols.size and not bad_rows.size:
            break
    mask = _enforce_identifiable(mask, rng)
    return ObservedMatrix(np.where(mask, X.values, np.nan), mask)


def apply_mar_3d(X: ObservedMatrix, frame: SiteFrame, seed) -> ObservedMatrix:
    """Three-pollutant missing-at-random rule: the first pollutant is
    missing where the observed covariate exceeds its 80th sample percentile;
    the other two get 20% MCAR."""
    if X.p != 3:
        raise ValueError("apply_mar_3d expects 3 pollutants")
    rng = np.random.default_rng(seed)
    r1 = frame.covars[:, 0]
    thr = np.quantile(r1, MAR3D_QUANTILE)
    mask = X.mask.copy()
    mask[:, 0] &= ~(r1 > thr)
    drop = rng.random((X.n, 2)) < MAR3D_MCAR_RATE
    mask[:, 1:] &= ~drop
    mask = _enforce_identifiable(mask, rng)
    return ObservedMatrix(np.where(mask, X.values, np.nan), mask)


def apply_mar_hd(X: ObservedMatrix, frame: SiteFrame, seed) -> ObservedMatrix:
    """High-dimensional missing-at-random rule: the first pollutant block is
    masked with high probability where the first covariate is extreme (its
    absolute value beyond the 70th percentile) and with low probability
    elsewhere; remaining pollutants get 20% MCAR."""
    if X.p != HD_P:
        raise ValueError(f"apply_mar_hd expects {HD_P} pollutants")
    rng = np.random.default_rng(seed)
    c = np.abs(frame.covars[:, 0])
    thr = np.quantile(c, MARHD_QUANTILE)
    p_first = np.where(c > thr, MARHD_HIGH_RATE, MARHD_LOW_RATE)
    mask = X.mask.copy()
    drop_first = rng.random((X.n, HD_BLOCK)) < p_first[:, None]
    mask[:, :HD_BLOCK] &= ~drop_first
    drop_rest = rng.random((X.n, HD_P - HD_BLOCK)) < MARHD_TAIL_RATE
    mask[:, HD_BLOCK:] &= ~drop_rest
    mask = _enforce_identifiable(mask, rng)
    return ObservedMatrix(np.where(mask, X.values, np.nan), mask)
