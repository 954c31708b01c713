"""Typed errors raised by the ranking engine and its pipeline."""


class EssrankError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(EssrankError, ValueError):
    """Operand shapes are incompatible."""


class ZeroSumVector(EssrankError, ValueError):
    """Sum-normalization of a zero-sum vector (excluded domain)."""


class EmptyInput(EssrankError, ValueError):
    """An operation received an empty collection it cannot act on."""


class InvalidConfig(EssrankError, ValueError):
    """A configuration value is outside its permitted range."""


class ClampedBiasZero(EssrankError, ValueError):
    """Every compound-bias entry was clamped to zero before normalization.

    The clamp (negative penalized bias entries are floored at 0) removed all
    mass, so no teleport distribution exists for the rank recursion.
    """


class OutOfRange(EssrankError, ValueError):
    """A requested index or count is outside the valid range."""


class MissingAnnotations(EssrankError, ValueError):
    """A sentence lacks the token annotations this operation requires."""


class ProviderError(EssrankError, RuntimeError):
    """Base class for model-provider failures."""


class ProviderTransportError(ProviderError):
    """Connection-level failure; retryable."""


class ProviderResponseError(ProviderError):
    """The provider answered but the response is unusable; terminal."""


class MaskTokenError(ProviderError, ValueError):
    """A fill-mask request did not contain exactly one mask token."""


class TokenCollision(EssrankError, RuntimeError):
    """Two distinct tokens hashed to the same stub basis direction.

    Raise rather than silently breaking the stub's analytic cosine identity;
    bump the stub dimension or seed.
    """
