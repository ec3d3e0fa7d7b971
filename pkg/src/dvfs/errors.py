"""Exception hierarchy shared across the package."""


class DvfsError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(DvfsError, ValueError):
    """An argument broke a documented precondition."""


class KeywordError(DvfsError, ValueError):
    """A keyword is empty or contains characters outside [a-z0-9]."""


class CapacityError(DvfsError, ValueError):
    """A document id does not fit in the tree."""


class DuplicateDocumentError(DvfsError, ValueError):
    pass


class QueryError(DvfsError, ValueError):
    pass


class DecryptionError(DvfsError):
    """Authenticated decryption failed (wrong key or tampered body)."""


class FormatError(DvfsError):
    """A persisted file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IndexCorruptionError(DvfsError):
    """A matched leaf has no stored digest."""


class LedgerValidationError(DvfsError):
    def __init__(self, message: str, seq: int | None = None):
        self.seq = seq
        if seq is not None:
            message = f"record {seq}: {message}"
        super().__init__(message)


class ConfigError(DvfsError):
    pass
