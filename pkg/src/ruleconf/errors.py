"""Error taxonomy shared across the package.

Each class maps to one CLI exit code so scripted callers can branch on
failure kind without parsing messages.
"""


class InputError(ValueError):
    """Invalid caller-supplied data: bad shapes, labels, fractions, CSV cells."""


class SchemaError(ValueError):
    """A persisted artifact does not match its expected JSON layout."""


class EmptyCCSError(RuntimeError):
    """No point fell inside the conformal critical set, so retraining is impossible."""


# CLI exit codes. 0 is success, 1 is reserved for unexpected crashes.
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SCHEMA = 3
EXIT_EMPTY_CCS = 4
