"""Compliance monitoring pipeline for longitudinal sensing studies."""

__version__ = "0.1.0"
