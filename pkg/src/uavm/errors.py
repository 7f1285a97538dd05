"""Exceptions raised by the kinematics, dynamics and simulation layers."""


class GimbalLock(ValueError):
    """Pitch angle too close to +-pi/2 for an RPY rate map or angle extraction."""


class SingularArm(ValueError):
    """Arm body Jacobian is (numerically) singular."""


class ConfigError(ValueError):
    """Scenario configuration could not be parsed or validated."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class LogSchemaError(ValueError):
    """A trajectory log is missing required columns."""


class NumericalAbort(RuntimeError):
    """Simulation stopped because the state became singular or non-finite."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message if t is None else f"t={t:.4f} s: {message}")
