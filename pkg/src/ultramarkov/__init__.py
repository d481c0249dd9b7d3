"""Exact workbench for relative ultragraph algebras and Markov interval maps."""

__version__ = "0.1.0"
