"""Discrete minimal surfaces with shape-space convergence diagnostics."""

__version__ = "0.1.0"
