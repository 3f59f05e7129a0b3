"""Exception types shared across the package.

Two families: ``ConfigError`` for bad user input (CLI exit code 2) and
``PreconditionError`` for numerical preconditions that fail at run time
(CLI exit code 3). Anything else escaping a pipeline is an internal bug
(exit code 4).
"""


class ConfigError(Exception):
    """Configuration could not be read or validated."""


class ParseError(ConfigError):
    """Config file is missing or is not valid JSON."""


class SchemaError(ConfigError):
    """Config violates the schema; carries every violation found."""

    def __init__(self, violations):
        self.violations = [(str(p), str(m)) for p, m in violations]
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.violations))


class PreconditionError(Exception):
    """A numerical precondition of an operation does not hold."""


class SingularMatrix(PreconditionError):
    """Pivot below threshold during elimination."""


class NotSymmetric(PreconditionError):
    pass


class NoConvergence(PreconditionError):
    """Iterative solver hit its sweep limit."""


class NotPositiveDefinite(PreconditionError):
    pass


class NoClosedForm(PreconditionError):
    """No catalogued closed-form characteristic function."""


class ModulusTooSmall(PreconditionError):
    """Complex log requested below the modulus floor."""


class GridMismatch(PreconditionError):
    """Two grids that must share a lattice do not."""


class FloorCollapsed(PreconditionError):
    """Characteristic-function modulus floor fell below the usable minimum."""


class InvalidFloor(PreconditionError):
    """Floor constant outside (0, 1]."""


class DimensionTooLarge(PreconditionError):
    pass


class TooFewSamples(PreconditionError):
    pass


class NotOrthogonal(PreconditionError):
    pass


class SingularAfterRounding(PreconditionError):
    """Entrywise precision rounding destroyed invertibility."""


class HypothesisViolated(PreconditionError):
    """Inputs do not satisfy the hypotheses of the separation test."""
