"""Dissipative quantum machine learning at desk scale."""

__version__ = "0.1.0"
