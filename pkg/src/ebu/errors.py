"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class EpisodeError(ValueError):
    """A transition sequence violates the episode chaining rules."""


class EmptyMemoryError(LookupError):
    """Sampling was requested from a replay memory with nothing to sample."""


class MazeGenerationError(RuntimeError):
    """No solvable maze was drawn within the attempt cap."""


class UnreachableGoalError(ValueError):
    pass


class IdxFormatError(ValueError):
    """Malformed IDX file: wrong magic, truncated payload, or count mismatch."""


class ConfigError(ValueError):
    pass
