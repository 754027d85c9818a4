"""Exception types shared across the library."""


class DegenerateFunction(ValueError):
    """Too few finite samples to carry out the requested construction."""


class EdgeDerivative(ValueError):
    """Derivative requested at or outside the edge of the finite support."""


class InvalidTemperature(ValueError):
    """kT must be strictly positive."""


class OutOfRange(ValueError):
    """Parameter outside its admissible open interval."""


class IncompatibleSupport(ValueError):
    """An output with positive probability has no compatible input letter."""


class PhaseMismatch(RuntimeError):
    """Operation only defined in the paramagnetic phase."""


class TooLarge(RuntimeError):
    """Requested enumeration exceeds the configured budget."""


class ImpossibleOutput(ValueError):
    """Channel output has zero likelihood under every message."""


class InfeasibleRate(ValueError):
    """No input distribution meets the rate constraint."""


class NotAboveCapacity(ValueError):
    """Code rate does not exceed the eavesdropper channel capacity."""


class SpecError(ValueError):
    """Malformed system description; carries the offending field name."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        detail = f": {message}" if message else ""
        super().__init__(f"spec field '{field}'{detail}")


class BoundarySolution(RuntimeError):
    """Equilibrium slope equation has no interior root.

    The supremum is attained at an endpoint of the feasible interval;
    `endpoint` says which one ("lower" or "upper") and `epsilon` where.
    """

    def __init__(self, endpoint: str, epsilon: float):
        self.endpoint = endpoint
        self.epsilon = epsilon
        super().__init__(f"equilibrium attained at {endpoint} boundary eps={epsilon:.6g}")
