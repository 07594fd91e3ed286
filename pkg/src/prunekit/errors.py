"""Error types shared across the package.

Every error carries a short machine-readable ``kind`` used by the CLI for
its ``error[<kind>]:`` stderr prefix and for mapping to exit codes.
"""


class PrunekitError(Exception):
    """Base class; ``kind`` is a short stable identifier."""

    kind = "runtime"


class UsageError(PrunekitError):
    kind = "usage"


class DataError(PrunekitError):
    """Invalid data or file contents (CLI exit code 2)."""

    kind = "data"


class BadMagicError(DataError):
    kind = "bad-magic"


class UnsupportedVersionError(DataError):
    kind = "version"


class BadFlagsError(DataError):
    kind = "flags"


class TruncatedFileError(DataError):
    kind = "truncated"


class LengthMismatchError(DataError):
    kind = "length-mismatch"


class NonFiniteError(DataError):
    kind = "non-finite"


class SchemaError(DataError):
    kind = "schema"


class TrainingDivergedError(PrunekitError):
    kind = "diverged"


class InvariantError(DataError):
    kind = "invariant"
