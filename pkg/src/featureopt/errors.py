"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration/usage problems
(exit 1), data problems (exit 2) and numeric failures (exit 3).
"""


class FeatureOptError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ConfigError(FeatureOptError, ValueError):
    exit_code = 1


class BadConfig(ConfigError):
    pass


class BadThreshold(ConfigError):
    pass


class KTooLarge(ConfigError):
    pass


class DataError(FeatureOptError, ValueError):
    exit_code = 2


class BadShape(DataError):
    pass


class TooFewRows(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class UnknownLabelColumn(DataError):
    pass


class UnknownDataset(DataError):
    pass


class EmptyAfterCleaning(DataError):
    pass


class ClassTooSmall(DataError):
    def __init__(self, message, class_name=None):
        super().__init__(message)
        self.class_name = class_name


class SingleClass(DataError):
    pass


class NumericError(FeatureOptError, ArithmeticError):
    exit_code = 3


class NonSymmetric(NumericError):
    pass


class NoConvergence(NumericError):
    pass
