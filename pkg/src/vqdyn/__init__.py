"""Variational quantum dynamics of a laser-driven truncated hydrogen atom."""

__version__ = "0.1.0"
