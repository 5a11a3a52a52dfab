"""Exception hierarchy.

Input problems (bad labels, malformed files, invalid states) derive from
:class:`InputError`; resource limits derive from :class:`ResourceLimitError`.
The CLI maps the two families to different exit codes.
"""


class QicError(Exception):
    """Base class for all library errors."""


class InputError(QicError, ValueError):
    """Malformed or inconsistent input."""


class LabelError(InputError):
    """Unknown, duplicated or colliding register label."""


class InvalidStateError(InputError):
    """A state or operator fails its normalization, Hermiticity or PSD check."""


class IsometryError(InputError):
    """A matrix claimed to be an isometry is not one, or its signature is wrong."""


class SignatureError(InputError):
    """The register signatures of a protocol do not chain correctly."""


class DistributionError(InputError):
    """An input distribution is not a normalized probability table."""


class ResourceLimitError(QicError):
    """The instance is too large for exact dense computation."""


class DimCapError(ResourceLimitError):
    """A dense matrix would exceed the configured ``dim_cap``."""


class SizeLimitError(ResourceLimitError):
    """A combinatorial enumeration exceeds its supported size."""
