"""Toolkit for building, filtering, pivoting and evaluating synthetic parallel corpora."""

__version__ = "0.1.0"
