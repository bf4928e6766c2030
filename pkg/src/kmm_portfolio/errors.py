"""Exception types shared across the package.

Validation problems derive from ``ValueError``; failures of a numerical
procedure on otherwise valid input derive from ``NumericalError``. The CLI
maps the two families onto distinct exit codes.
"""


class ValidationError(ValueError):
    """Input violates a documented constraint."""


class PhiDomainError(ValidationError):
    pass


class NoAmbiguityLimit(ValueError):
    """Raised for a degenerate second-order distribution (sigma_mu == 0)."""


class NumericalError(RuntimeError):
    pass


class QuadratureError(NumericalError):
    pass


class DivergentIntegralError(QuadratureError):
    pass


class NotBracketedError(NumericalError):
    pass


class NoRealRootError(NumericalError):
    pass


class InvalidSolutionError(NumericalError):
    pass


class SingularFeedbackError(NumericalError):
    pass


class FixedPointError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PathBlowUpError(NumericalError):
    def __init__(self, message, path_index=None):
        super().__init__(message)
        self.path_index = path_index


class AdmissibilityWarning(UserWarning):
    """Terminal wealth may become negative (CARA with small initial wealth)."""
