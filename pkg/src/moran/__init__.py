"""Neutral multi-allelic Moran models on the discrete simplex."""

__version__ = "0.1.0"
