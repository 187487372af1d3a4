"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs outside its contract."""


class RecordRejected(ContractViolation):
    """A record was refused by the memory bank."""


class BankFormatError(ValueError):
    """A bank file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BackendError(RuntimeError):
    """A remote embedding or generation backend failed."""


class ParseError(ValueError):
    """A generator response did not contain parseable K/D gains."""

    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(message)
