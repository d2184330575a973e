"""Warm-vapor photon-memory entanglement node: simulation and analysis."""

__version__ = "0.1.0"
