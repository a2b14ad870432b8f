"""Exception types shared across the package."""


class VeloshieldError(Exception):
    """Base class for all package errors."""


class SingularGradientError(VeloshieldError):
    """Barrier gradient is undefined (evaluation at an obstacle center)."""


class InfeasibleFilterError(VeloshieldError):
    """Active velocity constraint cannot be influenced by the reduced input."""


class InvalidGainsError(VeloshieldError):
    """Controller gain matrix violates its positivity requirement."""


class UnsupportedSystemError(VeloshieldError):
    """Controller requires structure (e.g. invertible B) the system lacks."""


class NumericalSingularityError(VeloshieldError):
    """Inertia matrix is too ill-conditioned to invert reliably."""


class DivergenceError(VeloshieldError):
    """Simulation state became non-finite."""

    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"state became non-finite at step {step} (t={time:.6g} s)")


class ScenarioError(VeloshieldError):
    """Scenario file or scenario value failed validation."""
