"""Exception hierarchy shared by all pluridyn modules."""


class PluridynError(Exception):
    """Base class. ``module`` and ``code`` feed the CLI's structured stderr lines."""

    module = "pluridyn"
    code = "error"

    def __init__(self, message="", witness=None):
        super().__init__(message)
        self.witness = witness


class ZeroVector(PluridynError, ValueError):
    module, code = "projective", "ZeroVector"


class PointInCenter(PluridynError, ValueError):
    module, code = "projective", "PointInCenter"


class WrongDimension(PluridynError, ValueError):
    module, code = "currents", "WrongDimension"


class DegenerateMap(PluridynError, ValueError):
    module, code = "endomorphism", "DegenerateMap"


class MapFormatError(PluridynError, ValueError):
    module, code = "endomorphism", "MapFormatError"


class SolverFailure(PluridynError, RuntimeError):
    module, code = "endomorphism", "SolverFailure"


class CriticalValue(PluridynError, RuntimeError):
    module, code = "endomorphism", "CriticalValue"


class CenterOnCurve(PluridynError, ValueError):
    module, code = "green", "CenterOnCurve"


class RefinementBudgetExceeded(PluridynError, RuntimeError):
    module, code = "currents", "RefinementBudgetExceeded"


class ThetaOutOfDomain(PluridynError, ValueError):
    module, code = "currents", "ThetaOutOfDomain"


class DegenerateFit(PluridynError, RuntimeError):
    module, code = "currents", "DegenerateFit"


class TrappingViolated(PluridynError, RuntimeError):
    module, code = "attractor", "TrappingViolated"


class NonConvergence(PluridynError, RuntimeError):
    module, code = "attractor", "NonConvergence"


class ResultantOverflow(PluridynError, RuntimeError):
    module, code = "algebraic", "ResultantOverflow"


class PrecisionExhausted(PluridynError, RuntimeError):
    module, code = "algebraic", "PrecisionExhausted"


class CommonComponent(PluridynError, ValueError):
    module, code = "algebraic", "CommonComponent"


class RegionFormatError(PluridynError, ValueError):
    module, code = "attractor", "RegionFormatError"
