"""Polar codes for binary-input channels with energy-harvesting constraints."""

__version__ = "0.1.0"
