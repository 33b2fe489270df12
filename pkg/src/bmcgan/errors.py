"""Exception types shared across the package."""


class InvalidStateError(ValueError):
    """A state contains NaN or infinite coordinates."""


class ControllerOverflowError(OverflowError):
    """A diffusion coefficient overflowed to a non-finite value."""

    def __init__(self, term, message=None):
        self.term = term
        super().__init__(message or f"non-finite value in diffusion term {term!r}")


class IntegrationDivergedError(RuntimeError):
    """The integrator produced a NaN or infinite state.

    Carries the last finite state and the step index at which it was seen.
    """

    def __init__(self, last_state, step):
        self.last_state = last_state
        self.step = step
        super().__init__(f"integration diverged after step {step}; last finite state {tuple(last_state)}")


class UnboundedObjectiveError(ValueError):
    """The stability bound objective has no finite maximum (rho2 == 0 or beta <= 1)."""


class TrainingDivergedError(RuntimeError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite loss at training step {step}")
