"""Generalized Fréchet mean sets over fixed and data-driven domains."""
__version__ = "0.1.0"
