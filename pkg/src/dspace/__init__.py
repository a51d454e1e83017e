"""Constraint-guided search over structured design spaces."""

__version__ = "0.1.0"
