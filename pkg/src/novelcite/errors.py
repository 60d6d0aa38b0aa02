"""Exception hierarchy; ``exit_code`` is what the command line returns."""


class NovelciteError(Exception):
    exit_code = 1


class ValidationError(NovelciteError, ValueError):
    """Bad configuration or arguments, detected before any compute."""

    exit_code = 2


class DataError(NovelciteError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class DegenerateError(NovelciteError, ValueError):
    """The data admit no meaningful statistic (single class, zero totals...)."""

    exit_code = 4
