"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 1, numerical failures
(SolverError, AnalysisError, EvaluationError, MeshError) -> 2,
HypothesisError -> 3.
"""


class PolyplateauError(Exception):
    """Base class for all library errors."""


class ParameterError(PolyplateauError, ValueError):
    """Invalid argument or violated precondition."""


class EvaluationError(PolyplateauError, RuntimeError):
    """Non-finite or otherwise invalid values met during evaluation."""


class InterpolationError(EvaluationError):
    """A query point left the domain of an interpolated field."""


class MeshError(PolyplateauError, RuntimeError):
    """Invalid or degenerate triangulation."""


class GenericityError(PolyplateauError, RuntimeError):
    """A polygon could not be brought into generic position."""


class SolverError(PolyplateauError, RuntimeError):
    """Variational solve failed or produced an inadmissible result."""


class AnalysisError(PolyplateauError, RuntimeError):
    """Surface too degenerate for curvature/branch analysis."""


class HypothesisError(PolyplateauError, RuntimeError):
    """Input violates the total-curvature hypothesis of the pipeline."""


class ConfigError(PolyplateauError, ValueError):
    """Malformed or inconsistent run configuration."""
