"""Load, pivot and render phase-shift map CSV files.

The input contract is the flat CSV written by the simulation CLI: a header
row naming the columns, then one row per grid point in row-major order
(the y column varies slowest).  Two layouts are understood:

    sweep:  eps_over_h_ghz, two_t_over_h_ghz, dphi_deg, ...
    pulse:  t_us,           tp_ns,            dphi_deg, ...

Extra columns are carried along but ignored by the renderers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import contourpy
import numpy as np

__all__ = [
    "SchemaError",
    "MapTable",
    "FigureRecipe",
    "load_map",
    "pivot_map",
    "flatten_map",
    "zero_isoline",
    "heatmap_with_isolines",
    "pulse_map",
    "render",
    "KIND_SCHEMAS",
]

VALUE_COLUMN = "dphi_deg"

#: required (x, y, value) column names per figure kind
KIND_SCHEMAS = {
    "heatmap_with_isolines": ("eps_over_h_ghz", "two_t_over_h_ghz", VALUE_COLUMN),
    "pulse_map": ("t_us", "tp_ns", VALUE_COLUMN),
}

#: axis captions per figure kind
KIND_LABELS = {
    "heatmap_with_isolines": ("detuning $\\epsilon/h$ (GHz)", "tunnel splitting $2t/h$ (GHz)"),
    "pulse_map": ("measurement time $t$ ($\\mu$s)", "pulse length $t_p$ (ns)"),
}


class SchemaError(Exception):
    """The CSV does not match the expected map layout."""


@dataclass(frozen=True)
class MapTable:
    """Flat map table: first column is x, second is y, plus named data columns."""

    x_label: str
    y_label: str
    value_label: str
    columns: dict[str, np.ndarray]

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.x_label])


@dataclass(frozen=True)
class FigureRecipe:
    """One figure: which CSV, which layout, where the image goes."""

    csv_path: str
    kind: str                       # "heatmap_with_isolines" | "pulse_map"
    out_path: str
    vmin: float | None = None       # color limits in degrees; default symmetric
    vmax: float | None = None

    def __post_init__(self):
        if self.kind not in KIND_SCHEMAS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if (self.vmin is None) != (self.vmax is None):
            raise ValueError("vmin and vmax must be given together")
        if self.vmin is not None and not self.vmin < self.vmax:
            raise ValueError("vmin must be < vmax")


def load_map(path: str, kind: str | None = None) -> MapTable:
    """Read a flat map CSV; with a kind, also enforce that kind's columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        rows = [row for row in reader if row]

    header = [name.strip() for name in header]
    if len(header) < 3:
        raise SchemaError(f"{path}: need at least 3 columns (x, y, value), got {header}")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names in header")
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    data = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: row {i + 2} has {len(row)} fields, header has {len(header)}"
            )
        try:
            data[i] = [float(v) for v in row]
        except ValueError as exc:
            raise SchemaError(f"{path}: row {i + 2}: {exc}") from None

    columns = {name: data[:, j].copy() for j, name in enumerate(header)}
    table = MapTable(
        x_label=header[0],
        y_label=header[1],
        value_label=VALUE_COLUMN if VALUE_COLUMN in header else header[2],
        columns=columns,
    )
    if kind is not None:
        for name in KIND_SCHEMAS[kind]:
            if name not in columns:
                raise SchemaError(f"{path}: missing required column {name!r}")
        if (table.x_label, table.y_label) != KIND_SCHEMAS[kind][:2]:
            raise SchemaError(
                f"{path}: expected columns {KIND_SCHEMAS[kind][0]!r}, "
                f"{KIND_SCHEMAS[kind][1]!r} first, got {table.x_label!r}, {table.y_label!r}"
            )
    return table


def pivot_map(table: MapTable) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rebuild the rectangular grid: x axis, y axis, values of shape (ny, nx).

    The rows must form a complete row-major grid; re-flattening the result
    reproduces the original columns exactly (no sorting, no averaging).
    """
    xc = table.columns[table.x_label]
    yc = table.columns[table.y_label]
    zc = table.columns[table.value_label]
    nx = len(np.unique(xc))
    ny = len(np.unique(yc))
    if nx < 2 or ny < 2:
        raise SchemaError(
            f"columns {table.x_label!r}/{table.y_label!r} must each hold >= 2 distinct values"
        )
    if nx * ny != len(xc):
        raise SchemaError(
            f"{len(xc)} rows do not tile a {ny} x {nx} grid of "
            f"{table.y_label!r} by {table.x_label!r}"
        )
    xg = xc.reshape(ny, nx)
    yg = yc.reshape(ny, nx)
    if np.any(xg != xg[0]) or np.any(yg != yg[:, :1]):
        raise SchemaError(
            f"rows are not in row-major order ({table.y_label!r} outer, "
            f"{table.x_label!r} inner)"
        )
    return xg[0].copy(), yg[:, 0].copy(), zc.reshape(ny, nx).copy()


def flatten_map(x: np.ndarray, y: np.ndarray, z: np.ndarray):
    """Inverse of pivot_map: row-major (x column, y column, value column)."""
    if z.shape != (len(y), len(x)):
        raise ValueError("z must have shape (len(y), len(x))")
    return (
        np.tile(np.asarray(x), len(y)),
        np.repeat(np.asarray(y), len(x)),
        np.asarray(z).reshape(-1),
    )


def zero_isoline(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vertices of the z = 0 contour, as an (n, 2) array of (x, y) points."""
    gen = contourpy.contour_generator(x=np.asarray(x), y=np.asarray(y), z=np.asarray(z))
    lines = gen.lines(0.0)
    if not lines:
        return np.empty((0, 2))
    return np.concatenate([np.asarray(seg) for seg in lines], axis=0)


def _color_limits(z: np.ndarray, vmin: float | None, vmax: float | None):
    if vmin is not None:
        return vmin, vmax
    bound = float(np.nanmax(np.abs(z))) or 1.0
    return -bound, bound


def _make_figure(x, y, z, labels, vmin, vmax):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    lo, hi = _color_limits(z, vmin, vmax)
    fig, ax = plt.subplots(figsize=(6.0, 4.5), dpi=150)
    mesh = ax.pcolormesh(x, y, z, cmap="RdBu_r", vmin=lo, vmax=hi, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="phase shift $\\Delta\\varphi$ (deg)")
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    return fig, ax, mesh


def heatmap_with_isolines(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    vmin: float | None = None,
    vmax: float | None = None,
    n_isolines: int = 13,
):
    """Diverging heatmap with overlaid isolines; the zero line is emphasized."""
    fig, ax, mesh = _make_figure(x, y, z, KIND_LABELS["heatmap_with_isolines"], vmin, vmax)
    lo, hi = mesh.get_clim()
    levels = np.linspace(lo, hi, n_isolines)
    levels = levels[(levels > np.nanmin(z)) & (levels < np.nanmax(z))]
    if levels.size:
        ax.contour(x, y, z, levels=levels, colors="0.25", linewidths=0.6)
    if np.nanmin(z) < 0.0 < np.nanmax(z):
        ax.contour(x, y, z, levels=[0.0], colors="black", linewidths=1.4)
    return fig, ax, mesh


def pulse_map(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    vmin: float | None = None,
    vmax: float | None = None,
):
    """Diverging heatmap of the phase shift over (measurement time, pulse length)."""
    fig, ax, mesh = _make_figure(x, y, z, KIND_LABELS["pulse_map"], vmin, vmax)
    return fig, ax, mesh


def render(recipe: FigureRecipe) -> str:
    """Render one recipe to its output path; returns the path written."""
    table = load_map(recipe.csv_path, kind=recipe.kind)
    x, y, z = pivot_map(table)
    if recipe.kind == "heatmap_with_isolines":
        fig, _, _ = heatmap_with_isolines(x, y, z, recipe.vmin, recipe.vmax)
    else:
        fig, _, _ = pulse_map(x, y, z, recipe.vmin, recipe.vmax)
    fig.tight_layout()
    # strip writer metadata so identical inputs give identical bytes
    fig.savefig(recipe.out_path, metadata={"Software": None})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return recipe.out_path
