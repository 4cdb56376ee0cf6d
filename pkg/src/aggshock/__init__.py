"""Simulation and estimation of micro models hit by aggregate shocks."""

__version__ = "0.1.0"
