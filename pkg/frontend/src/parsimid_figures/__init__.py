"""Paper-style figures rendered from benchmark summary CSVs."""

from .render import FigureSpec, SummaryTable, load_summary, render

__all__ = ["FigureSpec", "SummaryTable", "load_summary", "render"]
__version__ = "0.1.0"
