class OutOfFamilyError(RuntimeError):
    pass


class OutsideAnnulusError(RuntimeError):
    pass


class OutsideArcError(RuntimeError):
    pass


class NegativeRadicandError(RuntimeError):
    pass


class CriticalAbscissaError(RuntimeError):
    pass


class ZeroPolynomialError(RuntimeError):
    pass


class NoConvergenceError(RuntimeError):
    pass


class UnsupportedIndexError(RuntimeError):
    pass


class NegativeIndexError(RuntimeError):
    pass


class UnsupportedAnnulusError(RuntimeError):
    pass


class DenominatorTooSmallError(RuntimeError):
    pass


class DegenerateEliminationError(RuntimeError):
    pass


class NoKernelError(RuntimeError):
    pass


class DegreeTooSmallError(RuntimeError):
    pass


class EventStallError(RuntimeError):
    pass


class BlowupError(RuntimeError):
    pass


class BadPerturbationError(RuntimeError):
    pass


class VerificationError(RuntimeError):
    pass
