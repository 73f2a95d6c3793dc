"""Deterministic random-access codes for framed slotted access with a SIC receiver."""

__version__ = "0.1.0"

from .patterns import Pattern, Codebook, WeightProfile, parse_pattern, has_singleton_row, weight_profile

__all__ = [
    "Pattern",
    "Codebook",
    "WeightProfile",
    "parse_pattern",
    "has_singleton_row",
    "weight_profile",
    "__version__",
]
