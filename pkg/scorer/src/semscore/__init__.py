"""Scoring sidecar for (candidate, reference) text pairs."""

__version__ = "0.1.0"
