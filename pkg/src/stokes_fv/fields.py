"""Piecewise-constant fields on a grid and their discrete norms.

The discrete H1 inner product weights every edge by its transmissivity
|sigma|/d (interior: center-to-center distance, boundary: center-to-edge
distance), which on a uniform grid reduces to weight 1 on interior edges
and 2 on boundary edges.  The jump inner product is unweighted on every
grid.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .errors import GridError
from .grid import ClusterPartition, Grid


class ScalarField:
    """One real value per cell."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_cells,):
            raise GridError(
                f"expected {grid.n_cells} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n_cells))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Sample fn(x, y) at cell mass centers (pointwise interpolation)."""
        c = grid.cell_centers
        return cls(grid, np.asarray(fn(c[:, 0], c[:, 1]), dtype=float))

    def mean(self) -> float:
        g = self.grid
        return float(np.dot(g.cell_areas, self.values) / g.cell_areas.sum())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(a))

    __rmul__ = __mul__


class VectorField:
    """Two-component field stored as an (n_cells, 2) array."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_cells, 2):
            raise GridError(
                f"expected shape ({grid.n_cells}, 2), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.n_cells, 2)))

    @classmethod
    def from_components(cls, u1: ScalarField, u2: ScalarField) -> "VectorField":
        _check_same_grid(u1, u2)
        return cls(u1.grid, np.column_stack([u1.values, u2.values]))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField":
        """Sample fn(x, y) -> (vx, vy) at cell mass centers."""
        c = grid.cell_centers
        vx, vy = fn(c[:, 0], c[:, 1])
        vx = np.broadcast_to(np.asarray(vx, dtype=float), (grid.n_cells,))
        vy = np.broadcast_to(np.asarray(vy, dtype=float), (grid.n_cells,))
        return cls(grid, np.column_stack([vx, vy]))

    def component(self, c: int) -> ScalarField:
        return ScalarField(self.grid, self.values[:, c].copy())

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.values - other.values)

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.values + other.values)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.grid, self.values * float(a))

    __rmul__ = __mul__


def _check_same_grid(a, b):
    if a.grid is not b.grid and not a.grid.same_mesh(b.grid):
        raise GridError("fields live on different grids")


def _edge_weights_h1(grid: Grid):
    return grid.edge_length / grid.edge_dist


def h1_inner(v, w) -> float:
    """Discrete H1 inner product (edge differences, transmissivity weights)."""
    if isinstance(v, VectorField):
        _check_same_grid(v, w)
        return h1_inner(v.component(0), w.component(0)) + h1_inner(
            v.component(1), w.component(1)
        )
    _check_same_grid(v, w)
    g = v.grid
    wgt = _edge_weights_h1(g)
    ie = g.interior_edges
    be = g.boundary_edges
    k, l = g.edge_cell_k, g.edge_cell_l
    dv = v.values[k[ie]] - v.values[l[ie]]
    dw = w.values[k[ie]] - w.values[l[ie]]
    interior = float(np.dot(wgt[ie] * dv, dw))
    boundary = float(np.dot(wgt[be] * v.values[k[be]], w.values[k[be]]))
    return interior + boundary


def h1_norm(v) -> float:
    return math.sqrt(max(h1_inner(v, v), 0.0))


def l2_norm(v) -> float:
    g = v.grid
    if isinstance(v, VectorField):
        return math.sqrt(float(np.dot(g.cell_areas, (v.values**2).sum(axis=1))))
    return math.sqrt(float(np.dot(g.cell_areas, v.values**2)))


def l2_inner(v, w) -> float:
    _check_same_grid(v, w)
    g = v.grid
    if isinstance(v, VectorField):
        return float(np.dot(g.cell_areas, (v.values * w.values).sum(axis=1)))
    return float(np.dot(g.cell_areas, v.values * w.values))


def jump_inner(p: ScalarField, q: ScalarField) -> float:
    """Unweighted inner product of interior-edge jumps."""
    _check_same_grid(p, q)
    g = p.grid
    ie = g.interior_edges
    k, l = g.edge_cell_k[ie], g.edge_cell_l[ie]
    return float(np.dot(p.values[k] - p.values[l], q.values[k] - q.values[l]))


def jump_seminorm(q: ScalarField) -> float:
    return math.sqrt(max(jump_inner(q, q), 0.0))


def split_seminorms(q: ScalarField, partition: ClusterPartition):
    """Split the jump seminorm into (cross-cluster, intra-cluster) parts."""
    if not partition.grid.same_mesh(q.grid):
        raise GridError("partition belongs to a different grid")
    g = q.grid
    k, l = g.edge_cell_k, g.edge_cell_l

    def part(mask):
        e = np.flatnonzero(mask)
        d = q.values[k[e]] - q.values[l[e]]
        return float(np.dot(d, d))

    cross_sq = part(partition.cross_edge_mask)
    intra_sq = part(partition.intra_edge_mask)
    return math.sqrt(cross_sq), math.sqrt(intra_sq)


def zero_mean_project(q: ScalarField) -> ScalarField:
    """Subtract the area-weighted mean."""
    return ScalarField(q.grid, q.values - q.mean())


# -- CSV serialization -------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_scalar_csv(field: ScalarField, path) -> None:
    g = field.grid
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["i", "j", "value"])
        for k in range(g.n_cells):
            i, j = g.cell_ij[k]
            out.writerow([i, j, _fmt(field.values[k])])


def write_vector_csv(field: VectorField, path) -> None:
    g = field.grid
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["i", "j", "vx", "vy"])
        for k in range(g.n_cells):
            i, j = g.cell_ij[k]
            out.writerow([i, j, _fmt(field.values[k, 0]), _fmt(field.values[k, 1])])


def read_scalar_csv(grid: Grid, path) -> ScalarField:
    values = np.zeros(grid.n_cells)
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for i, j, v in rows:
            values[grid.cell_index(int(i), int(j))] = float(v)
    return ScalarField(grid, values)


def read_vector_csv(grid: Grid, path) -> VectorField:
    values = np.zeros((grid.n_cells, 2))
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for i, j, vx, vy in rows:
            values[grid.cell_index(int(i), int(j))] = (float(vx), float(vy))
    return VectorField(grid, values)
