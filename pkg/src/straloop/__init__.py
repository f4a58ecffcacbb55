"""Exact switching-controller synthesis for constant-rate switched systems."""

__version__ = "0.1.0"
