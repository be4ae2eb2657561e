"""Sticky spectrally positive Levy processes on uniform grids."""
__version__ = "0.1.0"
