"""Hierarchical campaign design: RL infrastructure deployment, value-function
vehicle design, and MILP mission scheduling on a time-expanded network."""

__version__ = "0.1.0"
