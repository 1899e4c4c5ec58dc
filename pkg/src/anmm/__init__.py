"""Attention-based neural matching model for ranking short answer texts."""

__version__ = "0.1.0"
