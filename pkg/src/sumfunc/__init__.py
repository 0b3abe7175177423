"""Exact arithmetic-function tables and asymptotic-independence / normal-limit diagnostics."""

__version__ = "0.1.0"
