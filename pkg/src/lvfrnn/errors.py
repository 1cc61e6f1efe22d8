"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions disagree with what an operation requires."""


class SingularSystemError(ArithmeticError):
    """The midpoint linear system is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SpectrumError(ArithmeticError):
    """The dense eigensolver did not converge."""


class ConvergenceError(RuntimeError):
    """Sinkhorn iteration hit its iteration cap before reaching the threshold."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared in the forward pass, the gradients, or the loss."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
