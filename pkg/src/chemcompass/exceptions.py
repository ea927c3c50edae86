"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class DegenerateStateError(ValueError):
    """State-dependent operation requested on a state with non-positive trace."""


class IntegrationError(RuntimeError):
    """Fixed-step integration went unstable or failed to converge."""


class OracleDisagreement(RuntimeError):
    """Two independent evaluation routes disagree beyond tolerance."""
