"""Exception types raised across the package.

Every error derives from :class:`PatchSepError`, so callers (the CLI in
particular) can catch one base class and map it to an exit code.
"""


class PatchSepError(Exception):
    """Base class for all package errors."""


# audio_io
class MalformedContainer(PatchSepError, ValueError):
    pass


class UnsupportedEncoding(PatchSepError, ValueError):
    pass


class EmptyAudio(PatchSepError, ValueError):
    pass


class IoFailure(PatchSepError, OSError):
    pass


# spectral
class NonPowerOfTwoLength(PatchSepError, ValueError):
    pass


class SignalTooShort(PatchSepError, ValueError):
    pass


# patching / autoenc / separation
class PatchLargerThanMatrix(PatchSepError, ValueError):
    pass


class DimensionMismatch(PatchSepError, ValueError):
    pass


class ShapeMismatch(PatchSepError, ValueError):
    pass


class AsymmetricTopology(PatchSepError, ValueError):
    pass


class NonFiniteLoss(PatchSepError, ArithmeticError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class MalformedModelFile(PatchSepError, ValueError):
    pass


class NegativeMagnitude(PatchSepError, ValueError):
    pass


# cluster
class TooFewPoints(PatchSepError, ValueError):
    pass


class DegenerateInput(PatchSepError, ValueError):
    pass


# evalkit
class RateMismatch(PatchSepError, ValueError):
    pass


class EmptySources(PatchSepError, ValueError):
    pass


class AllZeroReference(PatchSepError, ValueError):
    pass


class LengthMismatch(PatchSepError, ValueError):
    pass


class FewerEstimatesThanReferences(PatchSepError, ValueError):
    pass
