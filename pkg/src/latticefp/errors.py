"""Exception classes shared across the package.

The CLI maps these onto exit codes: ``ValidationError`` -> 2,
``NumericalError`` -> 3.
"""


class ValidationError(ValueError):
    """Malformed input: bad parameters, model files or state ids."""


class NumericalError(ArithmeticError):
    """The computation itself failed (singular solve, residue breach, ...)."""
