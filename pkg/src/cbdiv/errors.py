"""Exception hierarchy shared across the package."""


class CbdError(Exception):
    """Base class for all cbdiv errors."""


class InvalidInputError(CbdError, ValueError):
    """Malformed numeric input: NaN/inf entries, bad shapes, bad parameters."""


class DegenerateScaleError(CbdError, ValueError):
    """All coordinates have zero interquartile range; no data scale exists."""


class ContractViolationError(CbdError, ValueError):
    """An operation was called outside its documented contract."""


class InsufficientSampleError(CbdError, ValueError):
    """Sample size too small for the requested estimator."""


class InvalidModelError(CbdError, ValueError):
    """A conditional sampler returned a non-finite density on observed data."""


class InvalidScenarioError(CbdError, ValueError):
    """Unknown simulation scenario identifier."""


class SchemaError(CbdError, ValueError):
    """Input file does not match the expected schema."""
