class DataError(ValueError):
    """Input data is malformed, non-finite, or too short for the request."""


class SchemaError(DataError):
    """A CSV file does not contain the columns a schema names."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss.

    ``report`` carries the partial :class:`~qtlstm.trainer.TrainReport` up to
    the failing epoch.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
