"""Simulation of DFS-encoded charge devices coupled through a cavity."""

__version__ = "0.1.0"
