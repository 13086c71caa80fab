"""Deterministic intersection simulator directed by a gesture-signalling robot."""

__version__ = "0.1.0"
