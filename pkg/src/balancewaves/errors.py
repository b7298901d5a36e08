"""Exception hierarchy shared by all balancewaves modules."""


class BalanceWavesError(Exception):
    """Base class for every error raised by this package."""


# numerical kernels
class NoBracket(BalanceWavesError, ValueError):
    pass


class MaxIterExceeded(BalanceWavesError, RuntimeError):
    pass


class MaxDepthExceeded(BalanceWavesError, RuntimeError):
    pass


class MaxStepsExceeded(BalanceWavesError, RuntimeError):
    pass


class NonFinite(BalanceWavesError, ArithmeticError):
    pass


# thermodynamics / eigenstructure
class NonHyperbolic(BalanceWavesError, ValueError):
    """Raised when p_rho <= 0, i.e. the sound speed is not real and positive."""


class InversionFailure(BalanceWavesError, ValueError):
    pass


# exact families
class BadParams(BalanceWavesError, ValueError):
    pass


class ConstraintViolation(BalanceWavesError, ValueError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class OutOfValidity(BalanceWavesError, ValueError):
    def __init__(self, message: str, t_star: float = float("inf")):
        super().__init__(message)
        self.t_star = t_star


# Riemann problem
class InadmissibleData(BalanceWavesError, ValueError):
    """The Riemann data violate a hypothesis; ``hypothesis`` names which one."""

    def __init__(self, hypothesis: str, detail: str = ""):
        msg = hypothesis if not detail else f"{hypothesis}: {detail}"
        super().__init__(msg)
        self.hypothesis = hypothesis


class NoEquilibrium(BalanceWavesError, ValueError):
    pass


# finite differences
class CflViolation(BalanceWavesError, RuntimeError):
    pass


class VacuumFormed(BalanceWavesError, RuntimeError):
    pass
