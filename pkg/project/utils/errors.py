from typing import Optional


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class WordBudgetExceeded(LabError):
    """A word would grow past the configured letter budget.

    Attributes:
        length: Number of letters reached when the guard tripped.
        budget: The letter budget in force.
    """

    def __init__(self, length: int, budget: int):
        super().__init__(f"word length {length} exceeds letter budget {budget}")
        self.length = length
        self.budget = budget


class BitBudgetExceeded(LabError):
    """A matrix entry would grow past the configured bit-size budget."""

    def __init__(self, bits: int, budget: int):
        super().__init__(f"matrix entry of {bits} bits exceeds bit budget {budget}")
        self.bits = bits
        self.budget = budget


class WordParseError(LabError, ValueError):
    """Text could not be parsed as a word or an automorphism."""


class InverseCheckError(WordParseError):
    """The supplied inverse images do not invert the supplied images."""


class ConfigError(LabError, ValueError):
    """An experiment config failed validation.

    Attributes:
        field: Name of the offending config key, when one can be named.
    """

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class SampleError(LabError, ValueError):
    """A finite metric sample is invalid or too small for the requested estimate."""
