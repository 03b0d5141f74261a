"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``DivergenceError`` -> 3, ``DomainError`` -> 4.
"""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is valid."""


class StructuralError(ValueError):
    """Array or multi-index shapes do not match the frequency block layout."""


class ConfigError(ValueError):
    """A run configuration failed schema validation.

    ``path`` is the dotted location of the offending field.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DivergenceError(ArithmeticError):
    """Time stepping produced non-finite values."""

    def __init__(self, step, time, message="non-finite state"):
        self.step = step
        self.time = time
        super().__init__(f"{message} at step {step} (t={time:.6g})")


class AccuracyError(ArithmeticError):
    """A quadrature or refinement loop failed to reach its tolerance."""
