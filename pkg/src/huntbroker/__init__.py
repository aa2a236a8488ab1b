"""Governed query broker for analyst-driven threat hunting over mock sources."""

__version__ = "0.1.0"
