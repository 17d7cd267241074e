"""Offline figure and table rendering for twin-experiment CSV output."""

from .figures import FigureSpec, plot_timeseries
from .tables import render_convergence_table

__version__ = "0.1.0"
