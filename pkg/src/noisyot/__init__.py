"""Oblivious transfer secure against adversaries with noisy quantum storage."""

__version__ = "0.1.0"
