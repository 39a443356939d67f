"""Scalable quantitative reasoning for quantum circuits via local predicates."""

__version__ = "0.1.0"
