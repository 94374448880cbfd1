"""Offline figure rendering for the repeater sweep CSV tables.

This package never computes physics. Every number it draws comes from a CSV
produced by the simulation CLI, read through the documented table dialects.
"""

from .figures import FIGURE_KINDS, FigureSpec, PlotDataError, build_figure, render

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "PlotDataError",
    "build_figure",
    "render",
]
