"""Relative standard deviation (RSD) of target vs. actual hours as a volatility KPI."""

__version__ = "0.1.0"
