"""Routing a single repair crew over a disrupted power-distribution tree."""

__version__ = "0.1.0"
