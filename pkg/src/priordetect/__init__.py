"""Plug-in likelihood-ratio detection with an estimated prior."""

__version__ = "0.1.0"
