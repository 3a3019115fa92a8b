"""Exception types raised by the benchmarking toolkit.

Names mirror the failure modes of the public operations so callers (and the
HTTP layer) can map them to stable error codes.
"""


class TacbenchError(Exception):
    """Base class for every toolkit error."""


# -- dataset ---------------------------------------------------------------

class SchemaError(TacbenchError):
    """A file does not match its documented column/key layout."""


class MissingColumn(SchemaError):
    pass


class DuplicateSampleId(TacbenchError):
    pass


class SafeLimitViolation(TacbenchError):
    """A sample exceeds the manifest's safe indentation/force range."""


class DegenerateChannel(TacbenchError):
    """A label channel is constant over the training split."""


class EmptySplit(TacbenchError):
    pass


class UnknownSampleId(TacbenchError):
    pass


# -- metrics ---------------------------------------------------------------

class ZeroVariance(TacbenchError):
    """Ground truth has no variance; R^2 is undefined."""


class MissingPrediction(TacbenchError):
    def __init__(self, sample_ids):
        self.sample_ids = list(sample_ids)
        preview = ", ".join(self.sample_ids[:5])
        suffix = "..." if len(self.sample_ids) > 5 else ""
        super().__init__(
            f"{len(self.sample_ids)} sample(s) lack predictions: {preview}{suffix}"
        )


class EmptyPairs(TacbenchError):
    pass


class OffLattice(TacbenchError):
    """A resolution value is not a multiple of the 0.05 mm grating step."""


# -- spatial ---------------------------------------------------------------

class NoIncludedSamples(TacbenchError):
    pass


class TooFewBins(TacbenchError):
    pass


class ZeroMean(TacbenchError):
    pass


# -- robustness ------------------------------------------------------------

class UndefinedRobustness(TacbenchError):
    """Both intensity and error are unchanged: the score is 0/0."""


class BaselineZero(TacbenchError):
    pass


class EmptySet(TacbenchError):
    pass


class InsufficientTrials(TacbenchError):
    pass


class RaggedGroups(TacbenchError):
    pass


# -- predictor ---------------------------------------------------------------

class NoFeatures(TacbenchError):
    pass


class KTooLarge(TacbenchError):
    pass


class DimensionMismatch(TacbenchError):
    pass


class MissingClass(TacbenchError):
    pass


# -- simulator ---------------------------------------------------------------

class OutOfSurface(TacbenchError):
    pass


class SafeLimitExceeded(TacbenchError):
    pass


class UnknownScene(TacbenchError):
    pass


# -- report / radar ----------------------------------------------------------

class SchemaVersionMismatch(TacbenchError):
    pass


class InsufficientSensors(TacbenchError):
    pass


class MissingAxisValue(TacbenchError):
    pass
