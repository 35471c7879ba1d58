"""Multi-label self-paced learning with local label-correlation codes."""

__version__ = "0.1.0"
