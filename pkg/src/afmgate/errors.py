"""Exception types shared across the package.

Domain/precondition violations raise plain ValueError; the classes here
distinguish failure modes that callers (notably the CLI) handle differently.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration input."""


class FitQualityError(RuntimeError):
    """A least-squares fit did not meet its quality threshold."""


class PropagationError(RuntimeError):
    """Numerical failure (NaN/overflow) during time propagation."""


class RegimeError(ValueError):
    """Closed-form expression evaluated outside its domain of validity."""


class SampleRejected(RuntimeError):
    """A Monte Carlo kinematic sample violated a model assumption."""
