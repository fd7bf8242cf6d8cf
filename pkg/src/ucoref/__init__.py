"""Coreference mentions and referents on top of UCCA foundational-layer graphs."""

__version__ = "0.1.0"
