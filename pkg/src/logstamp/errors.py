"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the process exit code the CLI maps it to.
"""


class LogStampError(Exception):
    exit_code = 1


class InputError(LogStampError):
    """Missing or unusable input (file, empty corpus, empty token list)."""


class SchemaError(InputError):
    pass


class EmptyDatasetError(InputError):
    pass


class FormatError(LogStampError):
    """A model or store file is not in a format this version understands."""


class CorruptionError(FormatError):
    pass


class ConsistencyError(LogStampError):
    """Two inputs that must agree (ids, lengths) do not."""


class ParameterError(LogStampError):
    exit_code = 2
