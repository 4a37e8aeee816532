"""Unsupervised discovery of continuous skills on a sphere."""

__version__ = "0.1.0"
