"""End-to-end experiment harness, preprocessing for real monitoring data,
leave-one-site-out cross-validation, and CSV/JSON plumbing.

Every run is deterministic given the base seed: replicate work is keyed by
spawned seed sequences and output rows are canonically sorted before
writing, so worker count never changes bytes. Missingness and imputation
touch training rows only.
"""

from __future__ import annotations

import csv
import json
import os
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .basis import DesignMatrix, build_design
from .data import ObservedMatrix, ReductionResult, SiteFrame
from .exceptions import (
    ConfigError,
    NoConvergenceWarning,
    NonpositiveMass,
    NoSurvivors,
    ReplicationFailure,
)
from .impute import soft_impute_cv
from .kriging import uk_design, uk_fit, uk_predict
from .metrics import prediction_r2, prediction_r2_mse, reconstruction_error
from .reducers import (
    FitOptions,
    pca_fit,
    predpca_fit,
    proprpca_krige_fit,
    proprpca_spline_fit,
)
from .simulate import (
    ScenarioConfig,
    apply_mar_3d,
    apply_mar_hd,
    apply_mcar,
    gen_high_dim,
    gen_three_pollutant,
    parse_missing,
)

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "run_experiment",
    "run_loocv",
    "preprocess_components",
    "filter_gis_covariates",
    "gis_pca",
    "parse_config_file",
    "build_experiment_spec",
    "write_csv",
    "read_csv_table",
    "model_to_dict",
    "fit_method",
]

METHODS = ("pca", "predpca", "proprpca_spline", "proprpca_krige")
WORKERS_ENV_VAR = "PROPRPCA_WORKERS"
FAILURE_ABORT_FRACTION = 0.10

RESULTS_HEADER = (
    "replicate",
    "method",
    "pc_index",
    "prediction_r2",
    "prediction_r2_mse",
    "reconstruction_error",
    "converged",
)
SUMMARY_HEADER = (
    "method",
    "pc_index",
    "n_replicates",
    "median_r2",
    "iqr_r2",
    "median_re",
    "iqr_re",
)
LOADINGS_HEADER = ("replicate", "method", "pc_index", "variable", "loading")
SIMILARITY_HEADER = ("replicate", "method_a", "pc_a", "method_b", "pc_b", "abs_cosine")
TIMINGS_HEADER = ("replicate", "method", "wall_time_ms")
FAILURES_HEADER = ("replicate", "error")


@dataclass(frozen=True)
class ExperimentSpec:
    """Configuration of one simulation experiment."""

    scenario: ScenarioConfig
    methods: tuple = METHODS
    imputer: str = "none"
    q: int = 1
    replications: int = 200
    base_seed: int = 0
    output_dir: Optional[str] = None
    k_tilde: int = 10
    t_max: int = 500
    tol: float = 1e-6
    ridge: float = 1e-8
    workers: Optional[int] = None
    uk_phi_starts: int = 5
    uk_nm_maxiter: int = 80

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.q < 1:
            raise ConfigError("q must be >= 1")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods: {unknown}")
        if self.imputer not in ("none", "soft_impute"):
            raise ConfigError(f"unknown imputer {self.imputer!r}")
        mode, _ = parse_missing(self.scenario.missing)
        needs_impute = mode != "complete" and any(
            m in ("pca", "predpca") for m in self.methods
        )
        if needs_impute and self.imputer != "soft_impute":
            raise ConfigError(
                "pca/predpca with missing data require imputer=soft_impute"
            )


@dataclass
class ExperimentResult:
    results: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    loadings: list = field(default_factory=list)
    similarity: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def r2_values(self, method: str, pc_index: int) -> np.ndarray:
        return np.array(
            [r[3] for r in self.results if r[1] == method and r[2] == pc_index]
        )

    def loading_matrix(self, method: str, pc_index: int) -> np.ndarray:
        """replicate x p loading array for one method/component."""
        per_rep = {}
        for rep, m, pc, var, val in self.loadings:
            if m == method and pc == pc_index:
                per_rep.setdefault(rep, {})[var] = val
        reps = sorted(per_rep)
        p = max(len(v) for v in per_rep.values())
        out = np.zeros((len(reps), p))
        for i, rep in enumerate(reps):
            for var, val in per_rep[rep].items():
                out[i, var] = val
        return out


def generate_scenario(cfg: ScenarioConfig):
    """Dispatch to the configured generator; rows are train-first."""
    if cfg.kind.startswith("three_pollutant"):
        x, frame = gen_three_pollutant(cfg)
    else:
        x, frame, _ = gen_high_dim(cfg)
    return x, frame


def apply_missingness(x: ObservedMatrix, frame: SiteFrame, missing: str, seed):
    mode, rate = parse_missing(missing)
    if mode == "complete":
        return x
    if mode == "mcar":
        return apply_mcar(x, rate, seed)
    if x.p == 3:
        return apply_mar_3d(x, frame, seed)
    return apply_mar_hd(x, frame, seed)


def fit_method(
    method: str,
    x: ObservedMatrix,
    frame: SiteFrame,
    design: Optional[DesignMatrix],
    opts: FitOptions,
    imputed: Optional[np.ndarray] = None,
) -> ReductionResult:
    """Fit one reducer; pca/predpca consume the imputed matrix when the
    input is incomplete."""
    if method in ("pca", "predpca"):
        if not x.is_complete:
            if imputed is None:
                raise ConfigError(f"{method} requires complete or imputed data")
            x = ObservedMatrix(imputed)
        if method == "pca":
            return pca_fit(x, opts)
        return predpca_fit(x, design, opts)
    if method == "proprpca_spline":
        return proprpca_spline_fit(x, design, opts)
    if method == "proprpca_krige":
        return proprpca_krige_fit(x, frame, opts)
    raise ConfigError(f"unknown method {method!r}")


def true_test_scores(x_test_centered: np.ndarray, loadings: np.ndarray) -> np.ndarray:
    """Known test scores: sequential deflation projections of the centered
    test matrix onto the training loadings (same convention as training)."""
    a = x_test_centered.copy()
    m, q = a.shape[0], loadings.shape[1]
    out = np.empty((m, q))
    for l in range(q):
        v = loadings[:, l]
        out[:, l] = a @ v
        a -= np.outer(out[:, l], v)
    return out


def _replicate_rows(spec: ExperimentSpec, rep: int, seed_seq) -> dict:
    s_gen, s_miss, s_imp, s_knots = (int(s) for s in seed_seq.generate_state(4))
    cfg = replace(spec.scenario, seed=s_gen)
    x_all, frame_all = generate_scenario(cfg)
    n_tr = cfg.n_train
    train_idx = np.arange(n_tr)
    test_idx = np.arange(n_tr, n_tr + cfg.n_test)
    if np.intersect1d(train_idx, test_idx).size:
        raise AssertionError("train and test indices overlap")

    x_train = x_all.take_rows(train_idx)
    x_test = x_all.take_rows(test_idx)
    frame_train = frame_all.take_rows(train_idx)
    frame_test = frame_all.take_rows(test_idx)

    x_train_m = apply_missingness(x_train, frame_train, cfg.missing, s_miss)

    needs_design = any(m in ("predpca", "proprpca_spline") for m in spec.methods)
    design = build_design(frame_train, spec.k_tilde, s_knots) if needs_design else None
    ukd_train, uk_spec = uk_design(frame_train)
    ukd_test = uk_design(frame_test, uk_spec)

    imputed = None
    if not x_train_m.is_complete and spec.imputer == "soft_impute" and any(
        m in ("pca", "predpca") for m in spec.methods
    ):
        imputed, _ = soft_impute_cv(x_train_m, seed=s_imp)

    opts = FitOptions(
        q=spec.q, t_max=spec.t_max, tol=spec.tol, seed=spec.base_seed, ridge=spec.ridge
    )

    out = {"results": [], "loadings": [], "similarity": [], "timings": []}
    fitted = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        for method in spec.methods:
            t0 = time.perf_counter()
            res = fit_method(method, x_train_m, frame_train, design, opts, imputed)
            xt_c = x_test.values - res.column_means[None, :]
            u_true = true_test_scores(xt_c, res.loadings)
            u_hat = np.empty_like(u_true)
            for l, comp in enumerate(res.components):
                model = uk_fit(
                    comp.score,
                    ukd_train,
                    frame_train.coords,
                    n_phi_starts=spec.uk_phi_starts,
                    nm_maxiter=spec.uk_nm_maxiter,
                )
                u_hat[:, l] = uk_predict(model, ukd_test, frame_test.coords)
            elapsed_ms = int(round((time.perf_counter() - t0) * 1000))
            for l, comp in enumerate(res.components):
                r2 = prediction_r2(u_true[:, l], u_hat[:, l])
                r2m = prediction_r2_mse(u_true[:, l], u_hat[:, l])
                re = reconstruction_error(
                    xt_c, u_hat[:, : l + 1], res.loadings[:, : l + 1]
                )
                out["results"].append(
                    (rep, method, l + 1, r2, r2m, re, comp.converged)
                )
                for j, val in enumerate(comp.loading):
                    out["loadings"].append((rep, method, l + 1, j, float(val)))
            out["timings"].append((rep, method, elapsed_ms))
            fitted[method] = res
    methods_fitted = [m for m in spec.methods if m in fitted]
    for i, ma in enumerate(methods_fitted):
        for mb in methods_fitted[i + 1 :]:
            va, vb = fitted[ma].loadings, fitted[mb].loadings
            for la in range(va.shape[1]):
                for lb in range(vb.shape[1]):
                    cos = float(abs(va[:, la] @ vb[:, lb]))
                    out["similarity"].append((rep, ma, la + 1, mb, lb + 1, cos))
    return out


def resolve_workers(requested: Optional[int]) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run all replicates, aggregate, and (when configured) write the
    results/summary/loadings/similarity CSVs plus non-deterministic timings.

    Raises ReplicationFailure after writing outputs if more than 10% of
    replicates failed.
    """
    seeds = np.random.SeedSequence(spec.base_seed).spawn(spec.replications)
    workers = resolve_workers(spec.workers)

    def work(i):
        try:
            return i, _replicate_rows(spec, i, seeds[i]), None
        except Exception as err:  # noqa: BLE001 - per-replicate isolation
            return i, None, f"{type(err).__name__}: {err}"

    if workers == 1:
        raw = [work(i) for i in range(spec.replications)]
    else:
        raw = Parallel(n_jobs=workers)(
            delayed(work)(i) for i in range(spec.replications)
        )

    agg = ExperimentResult()
    for i, rows, err in raw:
        if err is not None:
            agg.failures.append((i, err))
            continue
        agg.results.extend(rows["results"])
        agg.loadings.extend(rows["loadings"])
        agg.similarity.extend(rows["similarity"])
        agg.timings.extend(rows["timings"])
    agg.results.sort(key=lambda r: (r[0], r[1], r[2]))
    agg.loadings.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    agg.similarity.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    agg.timings.sort(key=lambda r: (r[0], r[1]))
    agg.failures.sort(key=lambda r: r[0])
    agg.summary = summarize_results(agg.results)

    if spec.output_dir:
        write_experiment_outputs(spec.output_dir, agg)

    if len(agg.failures) > FAILURE_ABORT_FRACTION * spec.replications:
        raise ReplicationFailure(
            f"{len(agg.failures)}/{spec.replications} replicates failed"
        )
    return agg


def summarize_results(results: Sequence[tuple]) -> list:
    groups = {}
    for rep, method, pc, r2, _r2m, re, _conv in results:
        groups.setdefault((method, pc), []).append((r2, re))
    out = []
    for (method, pc), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        q25r, q50r, q75r = np.percentile(arr[:, 0], [25, 50, 75])
        q25e, q50e, q75e = np.percentile(arr[:, 1], [25, 50, 75])
        out.append(
            (method, pc, len(vals), q50r, q75r - q25r, q50e, q75e - q25e)
        )
    return out


def write_experiment_outputs(output_dir: str, agg: ExperimentResult) -> None:
    os.makedirs(output_dir, exist_ok=True)
    write_csv(os.path.join(output_dir, "results.csv"), RESULTS_HEADER, agg.results)
    write_csv(os.path.join(output_dir, "summary.csv"), SUMMARY_HEADER, agg.summary)
    write_csv(os.path.join(output_dir, "loadings.csv"), LOADINGS_HEADER, agg.loadings)
    write_csv(
        os.path.join(output_dir, "similarity.csv"), SIMILARITY_HEADER, agg.similarity
    )
    # wall times vary run to run; they live apart so the files above stay
    # byte-identical for a fixed seed
    write_csv(os.path.join(output_dir, "timings.csv"), TIMINGS_HEADER, agg.timings)
    if agg.failures:
        write_csv(
            os.path.join(output_dir, "failures.csv"), FAILURES_HEADER, agg.failures
        )


# ---------------------------------------------------------------------------
# CSV / config plumbing
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def read_csv_table(path: str):
    """Read a headed CSV into (header, list of string rows); empty cells
    stay empty strings."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    return header, rows


def parse_config_file(path: str) -> dict:
    """Flat key=value config; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


_SPEC_INT_KEYS = {
    "grid_size",
    "n_train",
    "n_test",
    "q",
    "replications",
    "seed",
    "k_tilde",
    "t_max",
    "workers",
    "uk_phi_starts",
    "uk_nm_maxiter",
}
_SPEC_FLOAT_KEYS = {"tol", "ridge"}
_SPEC_KEYS = _SPEC_INT_KEYS | _SPEC_FLOAT_KEYS | {
    "scenario",
    "missing",
    "methods",
    "imputer",
    "output_dir",
}


def build_experiment_spec(mapping: dict) -> ExperimentSpec:
    """Build and validate an ExperimentSpec from string key=value pairs
    (config file and/or CLI overrides)."""
    unknown = set(mapping) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "scenario" not in mapping:
        raise ConfigError("config must set scenario=<kind>")

    def geti(key, default):
        try:
            return int(mapping[key]) if key in mapping else default
        except ValueError as err:
            raise ConfigError(f"{key} must be an integer") from err

    def getf(key, default):
        try:
            return float(mapping[key]) if key in mapping else default
        except ValueError as err:
            raise ConfigError(f"{key} must be a number") from err

    try:
        scenario = ScenarioConfig(
            kind=mapping["scenario"],
            grid_size=geti("grid_size", 100),
            n_train=geti("n_train", 400),
            n_test=geti("n_test", 100),
            missing=mapping.get("missing", "complete"),
            seed=geti("seed", 0),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err
    methods = tuple(
        m.strip() for m in mapping.get("methods", ",".join(METHODS)).split(",") if m.strip()
    )
    workers = geti("workers", None) if "workers" in mapping else None
    return ExperimentSpec(
        scenario=scenario,
        methods=methods,
        imputer=mapping.get("imputer", "none"),
        q=geti("q", 1),
        replications=geti("replications", 200),
        base_seed=geti("seed", 0),
        output_dir=mapping.get("output_dir"),
        k_tilde=geti("k_tilde", 10),
        t_max=geti("t_max", 500),
        tol=getf("tol", 1e-6),
        ridge=getf("ridge", 1e-8),
        workers=workers,
        uk_phi_starts=geti("uk_phi_starts", 5),
        uk_nm_maxiter=geti("uk_nm_maxiter", 80),
    )


# ---------------------------------------------------------------------------
# real-data preprocessing
# ---------------------------------------------------------------------------

def preprocess_components(components, totals) -> ObservedMatrix:
    """Log-proportions of component mass: log(component / total).

    Missing cells stay missing; a nonpositive component or total at an
    observed cell raises NonpositiveMass.
    """
    comp = np.asarray(components, dtype=float)
    totals = np.asarray(totals, dtype=float)
    mask = ~np.isnan(comp)
    rows_obs = mask.any(axis=1)
    bad_total = rows_obs & (~np.isfinite(totals) | (totals <= 0))
    if bad_total.any():
        raise NonpositiveMass(
            f"nonpositive total mass at rows {np.where(bad_total)[0].tolist()}"
        )
    if (comp[mask] <= 0).any():
        raise NonpositiveMass("nonpositive component mass at an observed cell")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log(comp / totals[:, None])
    vals[~mask] = np.nan
    return ObservedMatrix(vals, mask)


RULE_ALL_MISSING = "all_missing"
RULE_MOSTLY_CONSTANT = "mostly_constant"
RULE_OUTLIER_HEAVY = "outlier_heavy"
RULE_LOW_MAX_LANDUSE = "low_max_landuse"


def filter_gis_covariates(covars, land_use=None):
    """Apply the four covariate-screening rules in order; returns
    (surviving columns, kept indices, removal report).

    Rules: drop columns (1) missing at all sites, (2) sharing one value at
    >= 80% of sites, (3) with >= 2% of values beyond 5 sd of the mean,
    (4) land-use columns whose maximum is <= 10.
    """
    covars = np.asarray(covars, dtype=float)
    n, k = covars.shape
    if land_use is None:
        land_use = np.zeros(k, dtype=bool)
    land_use = np.asarray(land_use, dtype=bool)
    report = []
    removed = set()

    for j in range(k):
        if np.isnan(covars[:, j]).all():
            removed.add(j)
            report.append((j, RULE_ALL_MISSING))
    for j in range(k):
        if j in removed:
            continue
        col = covars[:, j]
        obs = col[~np.isnan(col)]
        _, counts = np.unique(obs, return_counts=True)
        if counts.max() >= 0.8 * n:
            removed.add(j)
            report.append((j, RULE_MOSTLY_CONSTANT))
    for j in range(k):
        if j in removed:
            continue
        col = covars[:, j]
        obs = col[~np.isnan(col)]
        sd = obs.std()
        if sd == 0:
            continue
        frac = np.mean(np.abs(obs - obs.mean()) > 5 * sd)
        if frac >= 0.02:
            removed.add(j)
            report.append((j, RULE_OUTLIER_HEAVY))
    for j in range(k):
        if j in removed or not land_use[j]:
            continue
        obs = covars[:, j][~np.isnan(covars[:, j])]
        if obs.size and obs.max() <= 10.0:
            removed.add(j)
            report.append((j, RULE_LOW_MAX_LANDUSE))

    kept = [j for j in range(k) if j not in removed]
    if not kept:
        raise NoSurvivors("all covariate columns were removed")
    return covars[:, kept], kept, report


def gis_pca(covars, n_components: int = 5):
    """First principal-component scores of the standardized covariates."""
    covars = np.asarray(covars, dtype=float)
    if covars.shape[1] < n_components:
        raise ValueError(
            f"need at least {n_components} covariates, got {covars.shape[1]}"
        )
    if not np.isfinite(covars).all():
        raise ValueError("gis_pca requires complete covariates")
    sds = covars.std(axis=0)
    if (sds == 0).any():
        raise ValueError("constant covariate column; filter first")
    z = (covars - covars.mean(axis=0)) / sds
    u, s, vt = np.linalg.svd(z, full_matrices=False)
    scores = u[:, :n_components] * s[:n_components]
    # deterministic orientation
    for l in range(n_components):
        j = int(np.argmax(np.abs(vt[l])))
        if vt[l, j] < 0:
            scores[:, l] = -scores[:, l]
    return scores


# ---------------------------------------------------------------------------
# leave-one-site-out cross-validation
# ---------------------------------------------------------------------------

def run_loocv(
    data: ObservedMatrix,
    frame: SiteFrame,
    methods: Sequence[str],
    q: int,
    training: str = "complete",
    k_tilde: int = 10,
    seed: int = 0,
    t_max: int = 500,
    tol: float = 1e-6,
    uk_phi_starts: int = 5,
    uk_nm_maxiter: int = 80,
):
    """Leave out one complete site at a time, fit on the remaining
    (complete-only or full) sites, predict the held-out site's scores.

    Returns (fold rows, pooled summary rows, failures). Pooled prediction
    R^2 is computed over the concatenated predicted-vs-true pairs.
    """
    if training not in ("complete", "full"):
        raise ConfigError("training must be 'complete' or 'full'")
    complete_sites = np.where(data.mask.all(axis=1))[0]
    if complete_sites.size < 20:
        raise ConfigError(
            f"need >= 20 complete sites for LOOCV, found {complete_sites.size}"
        )
    opts = FitOptions(q=q, t_max=t_max, tol=tol, seed=seed)
    rows = []
    failures = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoConvergenceWarning)
        for fold, site in enumerate(complete_sites):
            if training == "complete":
                train_idx = complete_sites[complete_sites != site]
            else:
                train_idx = np.setdiff1d(np.arange(data.n), [site])
            try:
                rows.extend(
                    _loocv_fold(
                        data, frame, methods, opts, site, train_idx, k_tilde, seed,
                        uk_phi_starts, uk_nm_maxiter,
                    )
                )
            except Exception as err:  # noqa: BLE001 - per-fold isolation
                failures.append((fold, int(site), f"{type(err).__name__}: {err}"))
    summary = []
    for method in methods:
        for l in range(1, q + 1):
            pairs = [(r[3], r[4]) for r in rows if r[1] == method and r[2] == l]
            if len(pairs) >= 3:
                arr = np.asarray(pairs)
                r2 = prediction_r2(arr[:, 0], arr[:, 1])
            else:
                r2 = np.nan
            summary.append((method, l, len(pairs), r2))
    return rows, summary, failures


def _loocv_fold(
    data, frame, methods, opts, site, train_idx, k_tilde, seed,
    uk_phi_starts, uk_nm_maxiter,
):
    x_train = data.take_rows(train_idx)
    frame_train = frame.take_rows(train_idx)
    frame_test = frame.take_rows(np.array([site]))
    needs_design = any(m in ("predpca", "proprpca_spline") for m in methods)
    design = build_design(frame_train, k_tilde, seed) if needs_design else None
    ukd_train, uk_spec = uk_design(frame_train)
    ukd_test = uk_design(frame_test, uk_spec)
    imputed = None
    if not x_train.is_complete and any(m in ("pca", "predpca") for m in methods):
        imputed, _ = soft_impute_cv(x_train, seed=seed)
    rows = []
    for method in methods:
        res = fit_method(method, x_train, frame_train, design, opts, imputed)
        x_held = data.values[site] - res.column_means
        u_true = true_test_scores(x_held[None, :], res.loadings)[0]
        for l, comp in enumerate(res.components):
            model = uk_fit(
                comp.score,
                ukd_train,
                frame_train.coords,
                n_phi_starts=uk_phi_starts,
                nm_maxiter=uk_nm_maxiter,
            )
            u_hat = uk_predict(model, ukd_test, frame_test.coords)[0]
            rows.append((int(site), method, l + 1, float(u_true[l]), float(u_hat)))
    return rows


# ---------------------------------------------------------------------------
# model serialization (fit / predict CLI round trip)
# ---------------------------------------------------------------------------

def model_to_dict(
    method: str,
    result: ReductionResult,
    frame_train: SiteFrame,
    method_params: Optional[dict] = None,
) -> dict:
    comps = []
    for c in result.components:
        comps.append(
            {
                "loading": c.loading.tolist(),
                "score": c.score.tolist(),
                "coef": None if c.coef is None else np.asarray(c.coef).tolist(),
                "noise_var": float(c.noise_var),
                "spatial_params": None
                if c.spatial_params is None
                else list(c.spatial_params),
                "converged": bool(c.converged),
                "n_iter": int(c.n_iter),
            }
        )
    return {
        "method": method,
        "q": result.q,
        "column_means": result.column_means.tolist(),
        "components": comps,
        "train_coords": frame_train.coords.tolist(),
        "train_covars": frame_train.covars.tolist(),
        "params": method_params or {},
    }


def save_model(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
