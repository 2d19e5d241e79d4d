"""Figure rendering for phase-shift map CSV files."""

from . import cli
from .core import (
    KIND_SCHEMAS,
    FigureRecipe,
    MapTable,
    SchemaError,
    flatten_map,
    heatmap_with_isolines,
    load_map,
    pivot_map,
    pulse_map,
    render,
    zero_isoline,
)

__version__ = "0.1.0"

__all__ = [
    "KIND_SCHEMAS",
    "FigureRecipe",
    "MapTable",
    "SchemaError",
    "cli",
    "flatten_map",
    "heatmap_with_isolines",
    "load_map",
    "pivot_map",
    "pulse_map",
    "render",
    "zero_isoline",
]
