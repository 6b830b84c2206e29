"""Scaling laws for neural quantum states."""

__version__ = "0.1.0"
