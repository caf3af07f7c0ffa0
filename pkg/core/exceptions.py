"""
Error types shared by the numerical engine and the command-line layer.
"""


class DataError(ValueError):
    """Invalid input data or arguments."""


class ParseError(DataError):
    """CSV input that cannot be turned into a numeric series."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        location = []
        if line is not None:
            location.append('line {}'.format(line))
        if column is not None:
            location.append('column {!r}'.format(column))
        if location:
            message = '{} ({})'.format(message, ', '.join(location))
        super().__init__(message)


class NumericalError(ArithmeticError):
    """A numerical step failed (singular system, non-SPD input, ...)."""
