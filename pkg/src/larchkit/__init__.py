"""larchkit: accountable two-party authentication with a local credential log."""

__version__ = "0.1.0"
