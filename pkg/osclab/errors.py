"""
Exceptions raised by the Oscillatory Operator Laboratory
"""


class OscLabError(Exception):
    """Base class for all laboratory errors"""


class ConfigError(OscLabError):
    """Malformed configuration document or argument"""

    def __init__(self, message: str, field: str = None, line: int = None, column: int = None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)


class InvalidPhase(OscLabError, ValueError):
    """Phase violates degree/coefficient requirements"""


class DegenerateHessian(OscLabError):
    """Mixed Hessian of the phase vanishes identically"""


class RootIsolationFailure(OscLabError):
    """Root multiplicities cannot be decided at the clustering tolerance"""


class DiagonalEvaluation(OscLabError, ValueError):
    """Singular kernel evaluated on the diagonal x = y"""


class QuadratureFailure(OscLabError):
    """Quadrature did not reach the requested tolerance"""

    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)


class BudgetExceeded(QuadratureFailure):
    """Panel budget exhausted before convergence"""


class DampingSingularity(OscLabError):
    """Damping factor evaluated on the zero variety with Re(z) < 0"""


class NonConvergence(OscLabError):
    """Iterative norm estimate did not converge"""

    def __init__(self, message: str, estimate=None):
        self.estimate = estimate
        super().__init__(message)


class ResolutionInadequate(OscLabError):
    """Grid refinement changed a measured norm by more than the tolerance"""

    def __init__(self, message: str, diagnostics: dict = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
