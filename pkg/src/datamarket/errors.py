"""Exception types raised by the solver."""


class DataMarketError(Exception):
    """Base class for all solver errors."""


class InvalidParams(DataMarketError, ValueError):
    """A parameter is out of range or malformed.

    ``field`` names the offending input when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SubstitutesViolated(DataMarketError):
    """Residuals of two platform vectors are not orthogonal."""

    def __init__(self, pair, inner_product):
        i, j = pair
        super().__init__(
            f"platforms {i} and {j} violate the substitutes condition: "
            f"residual inner product {inner_product:.6g}"
        )
        self.pair = pair
        self.inner_product = inner_product


class SearchLimitExceeded(DataMarketError):
    """Exhaustive enumeration was requested above the configured cap."""


class InfeasibleCandidate(DataMarketError):
    """A candidate noise profile would need a negative noise variance."""

    def __init__(self, platform, sigma_sq):
        super().__init__(
            f"platform {platform} would need noise variance {sigma_sq:.6g} < 0"
        )
        self.platform = platform
        self.sigma_sq = sigma_sq


class AssumptionViolated(DataMarketError):
    """Zero noise does not deter the user from sharing for some entry profile."""

    def __init__(self, message, entry=None):
        super().__init__(message)
        self.entry = entry


class DegenerateMandate(DataMarketError):
    """The mandated noise is so large that the entry threshold blows up."""


class UnsupportedK(DataMarketError):
    """The requested operation is only defined for a specific platform count."""


class ScenarioError(InvalidParams):
    """A scenario file failed to parse or validate.

    ``line`` is the 1-based line of the offending value when it can be located.
    """

    def __init__(self, message, field=None, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message, field)
        self.line = line
        self.path = path
