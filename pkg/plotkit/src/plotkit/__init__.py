"""Render figure families from protocol sweep CSVs."""

from .figures import FIGSETS, FigureSpec, PlotError, aggregate, load_csv, render

__all__ = ["FIGSETS", "FigureSpec", "PlotError", "aggregate", "load_csv", "render"]
