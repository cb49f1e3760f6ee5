"""Exception types. Each carries a short machine-readable ``code``."""


class MarkovTailError(Exception):
    code = "error"


class InvalidParameterError(MarkovTailError, ValueError):
    code = "invalid-parameter"


class CapacityError(MarkovTailError):
    code = "capacity"


class ChainParseError(MarkovTailError, ValueError):
    code = "parse-error"


class NonStochasticRowError(MarkovTailError, ValueError):
    code = "non-stochastic-row"


class NotReversibleError(MarkovTailError, ValueError):
    code = "not-reversible"


class ReducibleChainError(MarkovTailError, ValueError):
    code = "reducible"


class NumericalFailureError(MarkovTailError, ArithmeticError):
    code = "numerical-failure"


class DimensionMismatchError(MarkovTailError, ValueError):
    code = "dimension-mismatch"


class PreconditionError(MarkovTailError, ValueError):
    code = "precondition"


class InvalidGapError(InvalidParameterError):
    code = "invalid-gap"


class WrongMethodError(InvalidParameterError):
    code = "wrong-method"


class UnattainableError(MarkovTailError, ValueError):
    code = "unattainable"
