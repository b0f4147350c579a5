"""Desk-scale laboratory for lossy Gaussian boson sampling."""

__version__ = "0.1.0"
