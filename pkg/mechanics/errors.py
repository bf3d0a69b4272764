"""Exception hierarchy shared by every package of the project.

Each error carries a ``category`` that the command line maps to an exit code.
"""


class ShellError(Exception):
    category = "general"


# --- Spline layer ---

class InvalidDegreeError(ShellError):
    category = "spline"


class UnsupportedKnotVectorError(ShellError):
    category = "spline"


class InvalidWeightError(ShellError):
    category = "spline"


# --- Geometry ---

class DegenerateGeometryError(ShellError):
    category = "geometry"


class InvertedElementError(ShellError):
    category = "geometry"

    def __init__(self, message, element_id=None):
        if element_id is not None:
            message = f"element {element_id}: {message}"
        super().__init__(message)
        self.element_id = element_id


# --- Constitution ---

class DegenerateViscosityError(ShellError):
    category = "material"


class LocalSingularityError(ShellError):
    category = "material"


class LocalNonConvergenceError(ShellError):
    category = "material"

    def __init__(self, message, residual_norm=None):
        super().__init__(message)
        self.residual_norm = residual_norm


class TangentSingularityError(ShellError):
    category = "material"


# --- Solvers ---

class SolverError(ShellError):
    category = "solver"


class DivergenceError(SolverError):
    pass


class ProjectionError(SolverError):
    pass


class StepFailure(SolverError):
    def __init__(self, step, cause):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


# --- Verification ---

class OracleParameterError(ShellError):
    category = "oracle"


class UndefinedErrorSignal(ShellError):
    category = "oracle"


class UnsupportedStudyError(ShellError):
    category = "oracle"


# --- Configuration ---

class ConfigError(ShellError):
    category = "config"


EXIT_CODES = {
    "general": 1,
    "config": 2,
    "spline": 3,
    "geometry": 3,
    "material": 4,
    "solver": 5,
    "oracle": 6,
}
