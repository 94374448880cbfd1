"""Density-matrix simulator and analytical rate engine for hybrid repeater chains."""

__version__ = "0.1.0"
