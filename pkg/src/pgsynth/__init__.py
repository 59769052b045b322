"""Probabilistic-grammar-guided synthesis and repair for a small typed
expression language."""

__version__ = "0.1.0"
