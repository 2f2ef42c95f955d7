"""Exception and warning types shared across the package."""


class UnidentifiableColumn(ValueError):
    """A pollutant column has fewer than 2 observed entries."""


class DimensionMismatch(ValueError):
    """Array shapes do not conform."""


class NotComplete(ValueError):
    """An operation requiring complete data received a matrix with missing entries."""


class SingularDesign(ValueError):
    """The design matrix normal equations are numerically singular."""


class CollinearDesign(ValueError):
    """Design columns are constant or nearly collinear."""


class TooManyKnots(ValueError):
    """More spline knots requested than available sites."""


class DuplicateKnots(ValueError):
    """Spline knots contain duplicate locations."""


class SchemaMismatch(ValueError):
    """New data does not match the schema the model was fitted with."""


class CovarianceSingular(ValueError):
    """A spatial covariance matrix could not be factorized even after jitter."""


class RankDeficientDesign(ValueError):
    """Kriging mean design is rank deficient or too wide for the sample size."""


class OptimFailed(RuntimeError):
    """Covariance parameter optimization produced no finite candidate."""


class DegenerateInput(ValueError):
    """A metric received constant or otherwise degenerate input."""


class NonpositiveMass(ValueError):
    """A mass concentration or total was nonpositive at an observed cell."""


class NoSurvivors(ValueError):
    """Covariate filtering removed every column."""


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ReplicationFailure(RuntimeError):
    """More than the tolerated share of simulation replicates failed (CLI exit code 3)."""


class NoConvergenceWarning(UserWarning):
    """An iterative fit hit its iteration cap before reaching tolerance."""
