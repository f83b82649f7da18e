"""Figure rendering for dpspectra harness CSVs."""

from .render import FigureSpec, FigureSpecError, PlottedSeries, render

__version__ = "0.1.0"
