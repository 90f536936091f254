"""Exception types shared across the package.

The CLI maps :class:`InputError` (and subclasses) to exit code 2; inequality
violations are reported through records, never through exceptions.
"""


class InputError(ValueError):
    """Malformed or inconsistent input (bad site sets, asymmetric couplings, ...)."""


class UnsupportedOperationError(InputError):
    """Operation not defined for this space (e.g. non-binary alphabet)."""


class EnumerationCapError(InputError):
    """An exhaustive operation would exceed the configured enumeration cap."""


class DegenerateFoldingError(InputError):
    """Folding with zero normalizer; the folded measure is undefined."""
