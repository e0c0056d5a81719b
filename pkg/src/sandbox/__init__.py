"""Continually-taught task planner, teaching loop, DMP skill library, and
simulated tabletop workspace with an operator gateway."""

__version__ = "0.1.0"
