"""Robust-loss certification, query-bounded adversaries, robust learners and impossibility games."""

__version__ = "0.1.0"
