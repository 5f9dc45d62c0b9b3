"""Exception types raised by ehpolar."""


class EhPolarError(ValueError):
    """Base class for all library errors."""


class NegativeProbability(EhPolarError):
    pass


class RowSumMismatch(EhPolarError):
    pass


class ConstraintOutOfRange(EhPolarError):
    pass


class LengthNotPowerOfTwo(EhPolarError):
    pass


class IndexOutOfRange(EhPolarError):
    pass


class MessageLengthMismatch(EhPolarError):
    pass


class AlphabetMismatch(EhPolarError):
    pass


class ImpossibleObservation(EhPolarError):
    """Both posterior masses vanished: the prefix/observation pair has probability 0."""


class AlphabetExplosion(EhPolarError):
    """Exact evolution exceeded its alphabet cap; use another backend."""


class BlocklengthTooSmall(EhPolarError):
    pass


class InfeasibleBlocklength(EhPolarError):
    pass


class BlocklengthTooLargeForExact(EhPolarError):
    pass


class NonpositiveGap(EhPolarError):
    pass
