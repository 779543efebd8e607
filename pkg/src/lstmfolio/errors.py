"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``DataError`` -> 3,
``NumericError`` -> 4.
"""


class LstmfolioError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LstmfolioError, ValueError):
    pass


class DataError(LstmfolioError, ValueError):
    pass


class NumericError(LstmfolioError, ArithmeticError):
    pass


class CsvFormatError(DataError):
    """A price CSV violates the ``date,ticker,close`` contract.

    ``line`` is the 1-based line number of the offending row (1 is the header),
    or ``None`` for file-level problems.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class AlignmentError(DataError):
    pass


class FetchError(DataError):
    """Base class for remote price retrieval failures."""


class FetchNetworkError(FetchError):
    pass


class UnknownTickerError(FetchError):
    pass


class EmptyResponseError(FetchError):
    pass


class MissingArtifactError(DataError):
    """An upstream pipeline output is absent."""

    def __init__(self, path, producer):
        self.path = path
        self.producer = producer
        super().__init__(f"missing {path}; run `lstmfolio {producer}` first")
