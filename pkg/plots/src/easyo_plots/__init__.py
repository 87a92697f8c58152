"""Figure rendering for the network simulator's CSV output."""

from .figures import (FigureResult, plot_bcd, plot_sensitivity,
                      plot_trajectories, plot_v_sweep)
from .io import SchemaError, read_csv

__all__ = ["FigureResult", "SchemaError", "plot_bcd", "plot_sensitivity",
           "plot_trajectories", "plot_v_sweep", "read_csv"]
