"""Exception hierarchy for the simulator.

Every operation raises one of these instead of a bare ValueError so that
pipeline failures can be tagged with the stage that produced them.
"""


class KkdreError(Exception):
    """Base class for all simulator errors."""


class ConfigError(KkdreError):
    """Invalid configuration value or file."""


class PipelineError(KkdreError):
    """Wraps a stage failure inside the end-to-end chain."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


# signal handling
class EmptyWaveform(KkdreError):
    pass


class NonPositiveRate(KkdreError):
    pass


class TooShort(KkdreError):
    pass


class InvalidRolloff(KkdreError):
    pass


# transmitter
class LengthNotDivisible(KkdreError):
    pass


class EmptySymbols(KkdreError):
    pass


class ToneAboveNyquist(KkdreError):
    pass


class ToneInsideSignalBand(KkdreError):
    pass


class AllZeroWaveform(KkdreError):
    pass


# quantizer / noise shaping
class InvalidEdge(KkdreError):
    pass


class EvenTaps(KkdreError):
    pass


class ConfigInvariantViolated(KkdreError):
    pass


class LengthMismatch(KkdreError):
    pass


# channel
class BandExceedsNyquist(KkdreError):
    pass


class NoSignalPower(KkdreError):
    pass


# receiver
class ConstantInput(KkdreError):
    pass


class NonPositiveMean(KkdreError):
    pass


class ExcessiveClipping(KkdreError):
    pass


class RateTooLow(KkdreError):
    pass


class NoCorrelationPeak(KkdreError):
    pass


class Diverged(KkdreError):
    pass


class AllCandidatesFailed(KkdreError):
    pass


# metrics
class DegenerateVariance(KkdreError):
    pass


# output
class IoFailure(KkdreError):
    pass
