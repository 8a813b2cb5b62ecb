"""Exact formal-integrability toolkit for symmetry jet groupoids of geometric objects."""

__version__ = "0.1.0"
