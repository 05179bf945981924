"""Exception taxonomy shared across the package.

The CLI maps ConfigError to exit code 2 and every other AdiabatError to
exit code 3.
"""


class AdiabatError(Exception):
    """Base class for all package errors."""


class ConfigError(AdiabatError):
    """Scenario configuration is malformed or violates a constraint."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")


class DomainError(AdiabatError):
    """An operation was called outside its stated preconditions."""


class UnsupportedFamilyError(AdiabatError):
    """The spectrum family does not admit the requested closed form."""


class DegenerateTemperatureError(AdiabatError):
    """All Boltzmann weights underflow at the requested temperature."""


class SingularVelocityError(AdiabatError):
    """Wave velocity requested at a point carrying no states (G = 0)."""


class DomainExitError(AdiabatError):
    """A characteristic left the support of the density of states."""

    def __init__(self, message: str, a_exit: float):
        self.a_exit = a_exit
        super().__init__(f"{message} (at a = {a_exit!r})")


class ExtrapolationError(AdiabatError):
    """A characteristic foot landed outside the initial grid."""


class DivergenceError(AdiabatError):
    """A partition-function integral or sum diverges."""


class BracketRangeError(AdiabatError):
    """Root bracketing failed within the configured range."""


class ResolutionError(AdiabatError):
    """Crossing detection exhausted its grid-refinement budget."""
