"""Exception hierarchy.

Every numerical or domain failure raised by the library derives from
:class:`WingLQGError`, so callers (the CLI in particular) can separate
library errors from programming errors with a single ``except``.
"""


class WingLQGError(Exception):
    """Base class for all library errors."""


class ParameterError(WingLQGError, ValueError):
    """Physical or numerical parameters violate a precondition."""


class DomainError(WingLQGError, ValueError):
    """A spatial position lies outside the span [0, L]."""


class RootFindingError(WingLQGError):
    def __init__(self, message, bracket):
        super().__init__(f"{message} (bracket {bracket[0]!r}..{bracket[1]!r})")
        self.bracket = bracket


class IllConditionedBasisError(WingLQGError):
    def __init__(self, condition):
        super().__init__(
            f"Gram matrix condition estimate {condition:.3e} exceeds threshold; "
            "projection onto the combined basis would amplify noise"
        )
        self.condition = condition


class DegenerateModeError(WingLQGError):
    """A bending mode has zero root slope, so its closed-form iterate is undefined."""


class NoStabilizingSolutionError(WingLQGError):
    """The Riccati equation has no stabilizing solution."""


class StabilizabilityError(NoStabilizingSolutionError):
    def __init__(self, message, eigenvalue, state_label=None):
        where = f" (dominant state {state_label})" if state_label else ""
        super().__init__(f"{message}: eigenvalue {eigenvalue:.6g}{where}")
        self.eigenvalue = eigenvalue
        self.state_label = state_label


class DetectabilityError(WingLQGError):
    def __init__(self, message, mode):
        super().__init__(f"{message}: {mode}")
        self.mode = mode


class PolicyIterationError(WingLQGError):
    def __init__(self, message, pair):
        super().__init__(f"{message} at {pair}")
        self.pair = pair


class InsufficientDataError(WingLQGError):
    """Too few modes to fit a decay rate."""


class DivergenceError(WingLQGError):
    def __init__(self, step, norm):
        super().__init__(f"state norm {norm:.3e} diverged at step {step}")
        self.step = step
        self.norm = norm


class UnknownScenarioError(WingLQGError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


class ConfigError(WingLQGError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
