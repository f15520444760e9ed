"""Noisy 3D cluster states: syndrome decoding, thresholds and separability bounds."""

__version__ = "0.1.0"
