"""Publication figures rendered from hjbsolve CSV artifacts.

This package never recomputes anything: every figure is a pure function of
the CSV files produced by the ``hjb`` command line.
"""

from hjbfigures.io import CsvError, read_table
from hjbfigures.figures import FIGURE_KINDS, render

__all__ = ["CsvError", "FIGURE_KINDS", "read_table", "render"]
