"""Exception hierarchy shared by the library and the CLI.

Every error carries a distinct ``exit_code`` which ``shaftwatch.main`` returns
to the shell.
"""
import warnings


class ShaftwatchError(Exception):
    exit_code: int = 1


# data


class MissingColumn(ShaftwatchError, ValueError):
    exit_code = 10

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Missing column: {name}")


class NonNumericCell(ShaftwatchError, ValueError):
    exit_code = 11

    def __init__(self, row: int, col: str, value: object = None):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"Non-numeric cell at row {row}, column {col!r}: {value!r}")


class EmptyFile(ShaftwatchError, ValueError):
    exit_code = 12


class RecordingInvariantError(ShaftwatchError, ValueError):
    exit_code = 13


class TooShort(ShaftwatchError, ValueError):
    exit_code = 14


class BadId(ShaftwatchError, ValueError):
    exit_code = 15


# rigsim


class OutOfRange(ShaftwatchError, ValueError):
    exit_code = 20


# dsp


class BadLength(ShaftwatchError, ValueError):
    exit_code = 30


class NonFinite(ShaftwatchError, ValueError):
    exit_code = 31


class TooFewRows(ShaftwatchError, ValueError):
    exit_code = 32


class ZeroVariance(ShaftwatchError, ValueError):
    exit_code = 33


class BadParams(ShaftwatchError, ValueError):
    exit_code = 34


# models


class SingleClass(ShaftwatchError, ValueError):
    exit_code = 40


class ShapeMismatch(ShaftwatchError, ValueError):
    exit_code = 41


class DivergedLoss(ShaftwatchError, ArithmeticError):
    exit_code = 42


class EmptyInput(ShaftwatchError, ValueError):
    exit_code = 43


class EmptySequence(ShaftwatchError, ValueError):
    exit_code = 44


class DegenerateVariance(UserWarning):
    """Emission variance hit the floor during HMM fitting."""


# pipeline


class TooFew(ShaftwatchError, ValueError):
    exit_code = 50


class MissingDataset(ShaftwatchError, FileNotFoundError):
    exit_code = 51


class EmptyInterval(ShaftwatchError, ValueError):
    exit_code = 52


class MissingClass(ShaftwatchError, ValueError):
    exit_code = 53


# cli / storage


class VersionMismatch(ShaftwatchError, ValueError):
    exit_code = 60


class ReportIoError(ShaftwatchError, OSError):
    exit_code = 70


def warn_degenerate_variance(n_dims: int) -> None:
    warnings.warn(
        f"Emission variance clamped to floor in {n_dims} dimension(s)",
        DegenerateVariance,
        stacklevel=3,
    )
