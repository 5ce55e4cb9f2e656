"""Exception hierarchy shared by all modules."""


class MinruleError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MinruleError, ValueError):
    """An argument is outside the domain an operation accepts."""


class GenerationError(MinruleError, RuntimeError):
    """A randomized generator exhausted its attempt budget."""


class DomainError(MinruleError, ValueError):
    """A probability that must be strictly positive was not."""


class NumericalDegeneracyError(MinruleError, ArithmeticError):
    """A normalizer collapsed to a nonpositive value.

    ``index`` holds the flat positions (in the leading batch shape) where
    the degeneracy occurred, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EngineError(MinruleError, RuntimeError):
    """Simulation failure with round/agent context and a partial trajectory."""

    def __init__(self, message, round=None, agent=None, trajectory=None):
        super().__init__(message)
        self.round = round
        self.agent = agent
        self.trajectory = trajectory


class OracleRangeError(MinruleError, ArithmeticError):
    """The linear-domain oracle would underflow below its safe range."""


class DataError(MinruleError, LookupError):
    """Requested series is not present in a trajectory or file."""


class SpecError(MinruleError, ValueError):
    """Experiment spec file is missing a key or holds an invalid value."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line
