"""Equilibria and comparative statics of two-party ideological competition."""

__version__ = "0.1.0"
