"""Figure rendering for timing-channel experiment CSVs."""

from .render import REQUIRED_COLUMNS, FigureSpec, RenderError, render

__version__ = "0.1.0"
