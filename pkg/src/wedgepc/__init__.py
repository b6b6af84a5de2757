"""Finite checks for infinitary wedge sentences and pseudo-elementary classes."""

__version__ = "0.1.0"
