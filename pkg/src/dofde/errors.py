"""Exception types shared across the package."""


class DomainError(ValueError):
    """A mathematical domain violation (gamma pole, order outside (0, 1], ...)."""


class InputError(ValueError):
    """Malformed or inconsistent input data (graphs, specs, configs, files)."""


class UnsupportedOrderError(InputError):
    """An order cannot be expressed as p/q with a small enough denominator.

    Raised by the chain-conversion path; callers that hit this should switch
    to the Grunwald-Letnikov backend, which has no rationality requirement.
    """


class DivergedError(RuntimeError):
    """A solve produced a non-finite state.  ``step`` is the failing index."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"solution diverged (non-finite state) at step {step}")


class NumericError(ArithmeticError):
    """A numerical evaluation lost too much accuracy to be trusted."""
