"""Structured 2D control-volume meshes and their 2x2 cluster partitions.

Cells are indexed (i, j) with i the column (x direction) and j the row
(y direction), flattened lexicographically as k = j*nx + i.  Unknowns are
collocated at cell mass centers.  Edges are stored as flat arrays with a
unit normal oriented from the first incident cell to the second (outward
for boundary edges).
"""

from __future__ import annotations

import json
import math
import re

import numpy as np

from .errors import ClusterError, GridError


class Grid:
    """Tensor-product mesh of the rectangle spanned by its coordinate lines.

    Attributes:
        xs, ys: strictly increasing coordinate lines (nx+1, ny+1).
        nx, ny: cell counts per direction; n_cells = nx*ny.
        cell_centers: (n_cells, 2) mass centers.
        cell_areas: (n_cells,) cell measures.
        cell_ij: (n_cells, 2) integer (i, j) per cell.
        edge_cell_k / edge_cell_l: incident cells per edge (l = -1 on boundary).
        edge_normal: (n_edges, 2) unit normal, k-to-l or outward.
        edge_length: edge measures.
        edge_dist: center-to-center distance (interior) or center-to-edge
            distance (boundary).
        edge_weight_k: interior-edge interpolation share of the k-side cell,
            h_perp_k / (h_perp_k + h_perp_l); zero on boundary edges.
        edge_center: (n_edges, 2) edge midpoints.
        interior_edges / boundary_edges: index arrays into the edge tables.
    """

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or xs.size < 3 or ys.size < 3:
            raise GridError("need at least 2 cells per direction")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise GridError("coordinates must be strictly increasing")
        self.xs = xs
        self.ys = ys
        self.nx = xs.size - 1
        self.ny = ys.size - 1
        self.n_cells = self.nx * self.ny

        dx = np.diff(xs)
        dy = np.diff(ys)
        self.dx = dx
        self.dy = dy
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])

        jj, ii = np.meshgrid(np.arange(self.ny), np.arange(self.nx), indexing="ij")
        self.cell_ij = np.column_stack([ii.ravel(), jj.ravel()])
        self.cell_centers = np.column_stack([cx[ii.ravel()], cy[jj.ravel()]])
        self.cell_areas = (dy[:, None] * dx[None, :]).ravel()

        self._build_edges(cx, cy)

        h = dx[0]
        self.is_uniform = bool(
            np.allclose(dx, h, rtol=1e-12, atol=0.0)
            and np.allclose(dy, h, rtol=1e-12, atol=0.0)
        )
        self.h = float(h) if self.is_uniform else None

    def _build_edges(self, cx, cy):
        nx, ny = self.nx, self.ny
        dx, dy = self.dx, self.dy

        def idx(i, j):
            return j * nx + i

        ks, ls, nxs, nys, lens, dists, wks, ecx, ecy = ([] for _ in range(9))

        def add(k, l, n, length, dist, wk, center):
            ks.append(k)
            ls.append(l)
            nxs.append(n[0])
            nys.append(n[1])
            lens.append(length)
            dists.append(dist)
            wks.append(wk)
            ecx.append(center[0])
            ecy.append(center[1])

        # vertical interior edges (normal +x), between columns i and i+1
        for i in range(nx - 1):
            for j in range(ny):
                add(
                    idx(i, j),
                    idx(i + 1, j),
                    (1.0, 0.0),
                    dy[j],
                    cx[i + 1] - cx[i],
                    dx[i] / (dx[i] + dx[i + 1]),
                    (self.xs[i + 1], cy[j]),
                )
        # horizontal interior edges (normal +y)
        for j in range(ny - 1):
            for i in range(nx):
                add(
                    idx(i, j),
                    idx(i, j + 1),
                    (0.0, 1.0),
                    dx[i],
                    cy[j + 1] - cy[j],
                    dy[j] / (dy[j] + dy[j + 1]),
                    (cx[i], self.ys[j + 1]),
                )
        # boundary edges, outward normals
        for j in range(ny):
            add(idx(0, j), -1, (-1.0, 0.0), dy[j], dx[0] / 2.0, 0.0, (self.xs[0], cy[j]))
            add(idx(nx - 1, j), -1, (1.0, 0.0), dy[j], dx[-1] / 2.0, 0.0, (self.xs[-1], cy[j]))
        for i in range(nx):
            add(idx(i, 0), -1, (0.0, -1.0), dx[i], dy[0] / 2.0, 0.0, (cx[i], self.ys[0]))
            add(idx(i, ny - 1), -1, (0.0, 1.0), dx[i], dy[-1] / 2.0, 0.0, (cx[i], self.ys[-1]))

        self.edge_cell_k = np.array(ks, dtype=int)
        self.edge_cell_l = np.array(ls, dtype=int)
        self.edge_normal = np.column_stack([nxs, nys]).astype(float)
        self.edge_length = np.array(lens, dtype=float)
        self.edge_dist = np.array(dists, dtype=float)
        self.edge_weight_k = np.array(wks, dtype=float)
        self.edge_center = np.column_stack([ecx, ecy]).astype(float)
        self.n_edges = self.edge_cell_k.size
        interior = self.edge_cell_l >= 0
        self.interior_mask = interior
        self.interior_edges = np.flatnonzero(interior)
        self.boundary_edges = np.flatnonzero(~interior)

    # -- small accessors matching the per-entity vocabulary ---------------

    def cell_index(self, i: int, j: int) -> int:
        return j * self.nx + i

    def cell_center(self, k: int):
        return tuple(self.cell_centers[k])

    def cell_area(self, k: int) -> float:
        return float(self.cell_areas[k])

    def edge_normal_of(self, e: int):
        return tuple(self.edge_normal[e])

    def edge_length_of(self, e: int) -> float:
        return float(self.edge_length[e])

    def edge_distance_of(self, e: int) -> float:
        return float(self.edge_dist[e])

    def same_mesh(self, other: "Grid") -> bool:
        return (
            self is other
            or (np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys))
        )

    def __repr__(self):
        kind = "uniform" if self.is_uniform else "tensor"
        return f"Grid({kind}, nx={self.nx}, ny={self.ny})"


class ClusterPartition:
    """Partition of the cells into 2x2 patches ("clusters").

    Interior edges split into two disjoint sets: edges between two cells of
    the same cluster (intra) and edges between two clusters (cross).
    """

    def __init__(self, grid: Grid):
        if grid.nx % 2 or grid.ny % 2:
            raise ClusterError("cluster partition needs even cell counts per direction")
        self.grid = grid
        ncx, ncy = grid.nx // 2, grid.ny // 2
        self.ncx, self.ncy = ncx, ncy
        self.n_clusters = ncx * ncy
        i = grid.cell_ij[:, 0]
        j = grid.cell_ij[:, 1]
        self.cluster_of = (j // 2) * ncx + (i // 2)

        self.members = np.empty((self.n_clusters, 4), dtype=int)
        for g in range(self.n_clusters):
            self.members[g] = np.flatnonzero(self.cluster_of == g)

        k = grid.edge_cell_k
        l = grid.edge_cell_l
        interior = grid.interior_mask
        same = np.zeros(grid.n_edges, dtype=bool)
        same[interior] = self.cluster_of[k[interior]] == self.cluster_of[l[interior]]
        self.intra_edge_mask = interior & same
        self.cross_edge_mask = interior & ~same

        self.cluster_areas = np.zeros(self.n_clusters)
        np.add.at(self.cluster_areas, self.cluster_of, grid.cell_areas)

    def members_of(self, g: int):
        return self.members[g]

    def __repr__(self):
        return f"ClusterPartition({self.ncx}x{self.ncy} clusters)"


def build_uniform(n: int) -> Grid:
    """Uniform n-by-n grid of the unit square, step 1/n."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise GridError(f"need n >= 2 cells per side, got {n!r}")
    coords = np.linspace(0.0, 1.0, n + 1)
    return Grid(coords, coords.copy())


def build_tensor(xs, ys) -> Grid:
    """Tensor-product grid from explicit coordinate lines."""
    return Grid(xs, ys)


def make_clusters(grid: Grid) -> ClusterPartition:
    """Group the cells of `grid` into 2x2 clusters (consecutive index pairs)."""
    return ClusterPartition(grid)


def cluster_regularity(grid: Grid, partition: ClusterPartition) -> float:
    """Minimum directional coverage of out-of-cluster neighbours over cells.

    For each cell with neighbours outside its own cluster, form the 2-by-m
    matrix of unit normals toward those neighbours; the cell value is the
    squared smallest singular value.  Returns the minimum over cells, or
    +inf when every cell's neighbours lie inside its cluster.
    """
    if partition.grid is not grid and not partition.grid.same_mesh(grid):
        raise ClusterError("partition belongs to a different grid")
    normals_per_cell: dict[int, list] = {}
    for e in grid.interior_edges:
        k = grid.edge_cell_k[e]
        l = grid.edge_cell_l[e]
        if partition.cluster_of[k] == partition.cluster_of[l]:
            continue
        n = grid.edge_normal[e]
        normals_per_cell.setdefault(k, []).append(n)
        normals_per_cell.setdefault(l, []).append(-n)
    if not normals_per_cell:
        return math.inf
    worst = math.inf
    for normals in normals_per_cell.values():
        worst = min(worst, min_direction_strength(normals))
    return worst

def min_direction_strength(normals) -> float:
    """Squared smallest singular value of the 2-by-m matrix of column normals."""
    mat = np.array(normals, dtype=float).T  # 2 x m
    if mat.shape[1] > 2:
        return 0.0  # wide matrix, nontrivial kernel
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s.min() ** 2)


_UNIFORM_RE = re.compile(r"^\s*uniform\s+n\s*=\s*(\d+)\s*$")


def parse_grid_config(text: str) -> Grid:
    """Build a grid from a plain-text description.

    Accepts ``uniform n=<int>`` or a JSON object ``{"x": [...], "y": [...]}``
    (optionally prefixed with ``tensor:``).
    """
    m = _UNIFORM_RE.match(text)
    if m:
        return build_uniform(int(m.group(1)))
    body = text.strip()
    if body.startswith("tensor:"):
        body = body[len("tensor:"):]
    try:
        obj = json.loads(body)
    except json.JSONDecodeError as err:
        raise GridError(f"unrecognized grid description: {text!r}") from err
    if not isinstance(obj, dict) or "x" not in obj or "y" not in obj:
        raise GridError("grid JSON must contain 'x' and 'y' coordinate lists")
    return build_tensor(obj["x"], obj["y"])
