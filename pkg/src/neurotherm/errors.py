"""Exception types shared across the package."""


class NeurothermError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NeurothermError):
    """A config file could not be parsed or contains invalid entries."""


class SaturationViolated(NeurothermError):
    """Gate voltage outside the MOSFET saturation region assumed by the model."""


class NoProgress(NeurothermError):
    """The hybrid state is in neither the flow nor the jump set, or jumps
    accumulate without continuous time advancing (Zeno-like behaviour)."""


class IntegratorFailure(NeurothermError):
    """The adaptive integrator could not take a step (step-size underflow)."""


class BracketInvalid(NeurothermError):
    """Event bracket endpoints have the same guard sign beyond tolerance."""


class WindowTooShort(NeurothermError):
    """Frequency-estimation window too short for the expected spike rate."""


class NoCrossing(NeurothermError):
    """The sampled averaged-input curve has no zero crossing."""


class MultipleCrossings(NeurothermError):
    """The sampled averaged-input curve crosses zero more than once."""


class InsufficientSamples(NeurothermError):
    """Too few samples inside the requested fit window."""
