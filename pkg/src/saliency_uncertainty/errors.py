"""Exception hierarchy.

Every error carries a short machine-parsable ``code`` and a process exit
status so the CLI can report failures uniformly.
"""


class SaliencyUncertaintyError(Exception):
    code = "E_GENERIC"
    exit_status = 1


class InvalidGeometry(SaliencyUncertaintyError, ValueError):
    code = "E_GEOMETRY"
    exit_status = 3


class InvalidKernel(SaliencyUncertaintyError, ValueError):
    code = "E_KERNEL"
    exit_status = 4


class InvalidEvent(SaliencyUncertaintyError, ValueError):
    code = "E_EVENT"
    exit_status = 5

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegenerateTruth(SaliencyUncertaintyError, ValueError):
    code = "E_DEGENERATE_TRUTH"
    exit_status = 6


class InvalidScenario(SaliencyUncertaintyError, ValueError):
    code = "E_SCENARIO"
    exit_status = 7


class FormatError(SaliencyUncertaintyError):
    code = "E_FORMAT"
    exit_status = 8

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ParseError(SaliencyUncertaintyError):
    code = "E_PARSE"
    exit_status = 9

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(SaliencyUncertaintyError, ValueError):
    code = "E_CONFIG"
    exit_status = 10
