"""Whittaker-function and newform sup-norm laboratory."""

__version__ = "0.1.0"
