"""Learned range test: inclusion reconstruction from one Cauchy data pair."""

__version__ = "0.1.0"
