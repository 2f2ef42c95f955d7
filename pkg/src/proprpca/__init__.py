"""Spatially predictive principal component methods for multi-pollutant
exposure matrices with missing entries, plus the kriging prediction stage,
SoftImpute baseline, and a replicated simulation harness."""

from .basis import DesignMatrix, build_design, eval_design_at, select_knots, tps_basis
from .data import (
    ComponentModel,
    ObservedMatrix,
    ReductionResult,
    SiteFrame,
    center_columns,
    deflate,
    project_scores,
)
from .impute import SoftImpute, soft_impute, soft_impute_cv
from .kriging import (
    ExponentialCovParams,
    KrigingModel,
    UniversalKriging,
    exp_cov_matrix,
    uk_fit,
    uk_predict,
)
from .metrics import prediction_r2, prediction_r2_mse, reconstruction_error
from .pipeline import (
    ExperimentSpec,
    filter_gis_covariates,
    gis_pca,
    preprocess_components,
    run_experiment,
    run_loocv,
)
from .reducers import (
    FitOptions,
    KrigePPCA,
    PredictivePCA,
    RankOnePCA,
    SplinePPCA,
    model_impute,
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
    gen_grid,
    gen_high_dim,
    gen_three_pollutant,
    split_train_test,
)

__version__ = "0.1.0"

__all__ = [
    "ObservedMatrix",
    "SiteFrame",
    "ComponentModel",
    "ReductionResult",
    "center_columns",
    "deflate",
    "project_scores",
    "DesignMatrix",
    "select_knots",
    "tps_basis",
    "build_design",
    "eval_design_at",
    "FitOptions",
    "pca_fit",
    "predpca_fit",
    "proprpca_spline_fit",
    "proprpca_krige_fit",
    "model_impute",
    "RankOnePCA",
    "PredictivePCA",
    "SplinePPCA",
    "KrigePPCA",
    "ExponentialCovParams",
    "KrigingModel",
    "UniversalKriging",
    "exp_cov_matrix",
    "uk_fit",
    "uk_predict",
    "SoftImpute",
    "soft_impute",
    "soft_impute_cv",
    "prediction_r2",
    "prediction_r2_mse",
    "reconstruction_error",
    "ScenarioConfig",
    "gen_grid",
    "gen_three_pollutant",
    "gen_high_dim",
    "apply_mcar",
    "apply_mar_3d",
    "apply_mar_hd",
    "split_train_test",
    "ExperimentSpec",
    "run_experiment",
    "run_loocv",
    "preprocess_components",
    "filter_gis_covariates",
    "gis_pca",
]
