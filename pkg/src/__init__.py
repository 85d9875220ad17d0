"""Desk-scale toolkit for help in classical and quantum zero knowledge."""

__version__ = "0.1.0"
