##
## Name:     rerror.py
## Purpose:  Exceptions raised by the RIS link simulator.
##
## Every error raised deliberately by this package derives from RISError,
## so callers (and the command-line driver) can tell our failures apart
## from programming errors.  The command-line exit status is chosen from
## the class of the exception; see cli.py.
##


class RISError(Exception):
    """Root class for errors raised by the RIS link simulator."""


class ConfigurationError(RISError, ValueError):
    """An exception representing an invalid parameter or scenario
    setting.  The `key' field names the offending configuration key
    (dotted, e.g. "geometry.rx_position_m") or parameter, if known; the
    `message' field gives the descriptive text.
    """
    def __init__(self, message, key=None):
        super(ConfigurationError, self).__init__(message)
        self.key = key
        self.message = message

    def __str__(self):
        if self.key is None:
            return self.message
        return '%s: %s' % (self.key, self.message)


class NumericalError(RISError, ArithmeticError):
    """Root class for numerical failures (quadrature, conditioning)."""


class QuadratureError(NumericalError):
    """An exception raised when an adaptive quadrature rule does not
    reach the requested tolerance.  The `estimate' field carries the
    last estimate of the integral, `error_bound' the difference between
    the last two refinements.
    """
    def __init__(self, message, estimate, error_bound):
        super(QuadratureError, self).__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound

    def __str__(self):
        return '%s (estimate %.6g, error bound %.3g)' % \
               (self.args[0], self.estimate, self.error_bound)


class ConditioningError(NumericalError):
    """An exception raised when a linear system is singular or too
    badly conditioned to solve.  The `condition' field carries the
    2-norm condition number estimate.
    """
    def __init__(self, message, condition):
        super(ConditioningError, self).__init__(message)
        self.condition = condition

    def __str__(self):
        return '%s (condition number %.3g)' % (self.args[0], self.condition)


class UndefinedNMSEError(NumericalError):
    """An exception raised when an NMSE is requested against a zero
    reference channel."""


class ContractError(RISError):
    """An exception raised when an operation's structural precondition
    does not hold, e.g., non-unitary pilots given to the unitary
    least-squares path.
    """


class InfeasibleBudgetError(RISError):
    """An exception raised when a pilot/feedback budget does not fit in
    the frame.  The `report' field carries the OverheadReport.
    """
    def __init__(self, message, report=None):
        super(InfeasibleBudgetError, self).__init__(message)
        self.report = report


__all__ = [
    "RISError", "ConfigurationError", "NumericalError", "QuadratureError",
    "ConditioningError", "UndefinedNMSEError", "ContractError",
    "InfeasibleBudgetError"
]

# Here there be dragons
