"""Detect context-dependent conversation messages from response diversity."""

__version__ = "0.1.0"
