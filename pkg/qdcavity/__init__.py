"""Steady-state moments of an incoherently pumped emitter in a lossy cavity."""

__version__ = "0.1.0"
