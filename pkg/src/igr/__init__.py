"""Ion-gating reservoir simulator and reservoir-computing toolkit."""

__version__ = "0.1.0"
