"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Bad or inconsistent run configuration.  CLI maps this to exit code 2."""


class NumericError(ArithmeticError):
    """Non-finite value encountered mid-computation.  CLI maps this to exit code 3.

    Carries enough context (offending point, iteration index) to locate the blow-up.
    """

    def __init__(self, message, x=None, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        if x is not None:
            message = f"{message} at x={x!r}"
        super().__init__(message)
        self.x = x
        self.iteration = iteration
