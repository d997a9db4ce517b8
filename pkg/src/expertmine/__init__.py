"""Mine a Git history for code-complexity deltas and rank component experts."""

__version__ = "0.1.0"
