"""Exception types raised across the package."""


class MrbError(Exception):
    """Base class for all mirror-RB errors."""


class DimensionError(MrbError, ValueError):
    """Objects with mismatched qubit counts were combined."""


class LayerError(MrbError, ValueError):
    """A layer is malformed or violates the device connectivity."""


class NonDeterministicOutcome(MrbError):
    """A Clifford sequence did not end in a computational basis state."""


class SamplerError(MrbError, ValueError):
    """A layer sampler was configured with unattainable parameters."""


class ModelCoverageError(MrbError, KeyError):
    """An error model has no channel for a gate placement."""


class FitError(MrbError):
    """The decay fit could not be performed or did not converge."""


class OracleCapError(MrbError, ValueError):
    """A dense oracle was asked to handle more qubits than it supports."""


class FormatError(MrbError, ValueError):
    """A serialized file could not be parsed."""
