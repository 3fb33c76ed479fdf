"""Desk-scale numerics for the polyharmonic operator (-Delta)^l + V with limit-periodic V."""

__version__ = "0.1.0"
