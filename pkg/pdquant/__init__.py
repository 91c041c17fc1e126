"""Pixel-discretization uncertainty toolkit for phase-detection boiling masks."""

__version__ = "1.0.0"
