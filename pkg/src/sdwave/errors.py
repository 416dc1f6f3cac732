"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 3)."""


class BlowUpError(RuntimeError):
    """Raised when a field leaves the finite small-data regime.

    Carries the last time at which the state was still valid.
    """

    def __init__(self, t: float, message: str = "") -> None:
        self.t = t
        super().__init__(message or f"blow-up detected at t={t:.6g}")


class LinearSolveError(RuntimeError):
    """Iterative linear solve failed to reach tolerance (CLI exit code 4)."""

    def __init__(self, t: float, iterations: int, message: str = "") -> None:
        self.t = t
        self.iterations = iterations
        super().__init__(
            message or f"linear solve did not converge within {iterations} iterations at t={t:.6g}"
        )
