"""Discrete diffusion, gradient, divergence and stabilization operators.

Every operator exists in two forms that must agree to rounding:

* a cell-update ("apply") form looping over edges, and
* an assembled sparse matrix, scaled row-wise by the cell area so that a
  matrix row is the integral of the operator over the cell.

Fluxes are oriented along the stored edge normal (k-to-l, outward on the
boundary).  On interior edges of a tensor grid:

* diffusive flux of v through sigma:  (|sigma|/d) (v_l - v_k),
* velocity flux:   |sigma| [ (1-a) u_k + a u_l ] . n,
* pressure flux:   |sigma| [ a p_k + (1-a) p_l ] n,

with a = h_perp_k / (h_perp_k + h_perp_l); the "swapped" pressure weights
make the assembled gradient exactly minus the transpose of the assembled
divergence.  On a uniform grid both interpolations reduce to the plain
average.  Boundary edges carry a two-point diffusive flux to a zero wall
value, a pressure flux |sigma| p_k n, and no velocity flux.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ClusterError, GridError
from .fields import ScalarField, VectorField, _check_same_grid
from .grid import ClusterPartition, Grid


# -- flux form ---------------------------------------------------------------

def diffusion_fluxes(field) -> np.ndarray:
    """Per-edge diffusive flux, consistent with the edge integral of the
    normal derivative for affine data.  Shape (n_edges,) for scalar input,
    (n_edges, 2) for vector input."""
    g = field.grid
    k, l = g.edge_cell_k, g.edge_cell_l
    w = g.edge_length / g.edge_dist
    vals = field.values
    interior = g.interior_mask
    neighbour = vals[np.where(interior, l, 0)]  # wall value is zero
    if vals.ndim == 2:
        neighbour = neighbour * interior[:, None]
        w = w[:, None]
    else:
        neighbour = neighbour * interior
    return w * (neighbour - vals[k])


def velocity_fluxes(u: VectorField) -> np.ndarray:
    """Per-edge normal velocity flux G_sigma; zero on boundary edges."""
    g = u.grid
    k, l = g.edge_cell_k, g.edge_cell_l
    a = g.edge_weight_k
    out = np.zeros(g.n_edges)
    ie = g.interior_edges
    uk = u.values[k[ie]]
    ul = u.values[l[ie]]
    interp = (1.0 - a[ie])[:, None] * uk + a[ie][:, None] * ul
    out[ie] = g.edge_length[ie] * np.einsum("ij,ij->i", interp, g.edge_normal[ie])
    return out


def pressure_fluxes(p: ScalarField) -> np.ndarray:
    """Per-edge pressure flux H_sigma (a 2-vector per edge)."""
    g = p.grid
    k, l = g.edge_cell_k, g.edge_cell_l
    a = g.edge_weight_k
    neighbour = p.values[np.where(g.interior_mask, l, 0)]
    interp = np.where(
        g.interior_mask,
        a * p.values[k] + (1.0 - a) * neighbour,
        p.values[k],
    )
    return (g.edge_length * interp)[:, None] * g.edge_normal


# -- cell-update form --------------------------------------------------------

def _scatter_edge_diff(grid, edge_weights, vals, selected):
    """Sum_{edges} w (v_k - v_l) accumulated into both incident cells."""
    out = np.zeros_like(vals)
    k = grid.edge_cell_k[selected]
    l = grid.edge_cell_l[selected]
    t = edge_weights[selected] * (vals[k] - vals[l])
    np.add.at(out, k, t)
    np.add.at(out, l, -t)
    return out


def laplacian_apply(u):
    """Cell values of the negative discrete Laplacian (homogeneous wall values)."""
    g = u.grid
    w = g.edge_length / g.edge_dist
    ie = g.interior_edges
    be = g.boundary_edges
    kb = g.edge_cell_k[be]

    def one(vals):
        out = _scatter_edge_diff(g, w, vals, ie)
        np.add.at(out, kb, w[be] * vals[kb])
        return out / g.cell_areas

    if isinstance(u, VectorField):
        return VectorField(g, np.column_stack([one(u.values[:, 0]), one(u.values[:, 1])]))
    return ScalarField(g, one(u.values))


def gradient_apply(p: ScalarField) -> VectorField:
    """Cell values of the discrete pressure gradient."""
    g = p.grid
    h = pressure_fluxes(p)
    out = np.zeros((g.n_cells, 2))
    k = g.edge_cell_k
    l = g.edge_cell_l
    ie = g.interior_edges
    be = g.boundary_edges
    np.add.at(out, k[ie], h[ie])
    np.add.at(out, l[ie], -h[ie])
    np.add.at(out, k[be], h[be])
    return VectorField(g, out / g.cell_areas[:, None])


def divergence_apply(u: VectorField) -> ScalarField:
    """Cell values of the discrete velocity divergence (no wall flux)."""
    g = u.grid
    f = velocity_fluxes(u)
    out = np.zeros(g.n_cells)
    ie = g.interior_edges
    np.add.at(out, g.edge_cell_k[ie], f[ie])
    np.add.at(out, g.edge_cell_l[ie], -f[ie])
    return ScalarField(g, out / g.cell_areas)


def stab_laplacian_apply(
    p: ScalarField, variant: str = "full", partition: ClusterPartition | None = None
) -> ScalarField:
    """Pressure-jump stabilization operator, per cell.

    Edge weight |sigma| * d  (h^2 on a uniform grid), normalized by the cell
    area; `variant` selects all interior edges ("full") or only the edges
    inside a cluster ("intra_cluster", needs `partition`).
    """
    g = p.grid
    if variant == "full":
        selected = g.interior_edges
    elif variant == "intra_cluster":
        if partition is None:
            raise ClusterError("intra_cluster variant needs a cluster partition")
        if not partition.grid.same_mesh(g):
            raise ClusterError("partition belongs to a different grid")
        selected = np.flatnonzero(partition.intra_edge_mask)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    w = g.edge_length * g.edge_dist
    out = _scatter_edge_diff(g, w, p.values, selected)
    return ScalarField(g, out / g.cell_areas)


def duality_defect(p: ScalarField, v: VectorField) -> float:
    """Quadrature of (grad p . v) + (p div v); zero up to rounding by duality."""
    _check_same_grid(p, v)
    g = p.grid
    gp = gradient_apply(p)
    dv = divergence_apply(v)
    t1 = float(np.dot(g.cell_areas, np.einsum("ij,ij->i", gp.values, v.values)))
    t2 = float(np.dot(g.cell_areas, p.values * dv.values))
    return t1 + t2


# -- assembled sparse form (rows scaled by cell area) -------------------------

def h1_stiffness_matrix(grid: Grid) -> sp.csr_matrix:
    """Scalar H1 stiffness matrix; row k stores |K| times the Laplacian update."""
    w = grid.edge_length / grid.edge_dist
    ie = grid.interior_edges
    be = grid.boundary_edges
    k = grid.edge_cell_k
    l = grid.edge_cell_l
    rows = np.concatenate([k[ie], l[ie], k[ie], l[ie], k[be]])
    cols = np.concatenate([k[ie], l[ie], l[ie], k[ie], k[be]])
    vals = np.concatenate([w[ie], w[ie], -w[ie], -w[ie], w[be]])
    n = grid.n_cells
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def divergence_matrix(grid: Grid) -> sp.csr_matrix:
    """Maps stacked velocity [u1; u2] to |K| times the divergence per cell."""
    n = grid.n_cells
    ie = grid.interior_edges
    k = grid.edge_cell_k[ie]
    l = grid.edge_cell_l[ie]
    a = grid.edge_weight_k[ie]
    length = grid.edge_length[ie]
    rows, cols, vals = [], [], []
    for c in range(2):
        nc = grid.edge_normal[ie, c]
        rows += [k, k, l, l]
        cols += [k + c * n, l + c * n, k + c * n, l + c * n]
        vals += [
            length * (1.0 - a) * nc,
            length * a * nc,
            -length * (1.0 - a) * nc,
            -length * a * nc,
        ]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, 2 * n),
    ).tocsr()


def gradient_matrix(grid: Grid) -> sp.csr_matrix:
    """Maps pressure to |K| times the gradient, stacked per component.

    Assembled edge-wise on its own; equals minus the transpose of
    `divergence_matrix` through the closed-cell identity.
    """
    n = grid.n_cells
    ie = grid.interior_edges
    be = grid.boundary_edges
    k = grid.edge_cell_k
    l = grid.edge_cell_l
    a = grid.edge_weight_k[ie]
    li = grid.edge_length[ie]
    lb = grid.edge_length[be]
    rows, cols, vals = [], [], []
    for c in range(2):
        nc = grid.edge_normal[ie, c]
        rows += [k[ie] + c * n, k[ie] + c * n, l[ie] + c * n, l[ie] + c * n]
        cols += [k[ie], l[ie], k[ie], l[ie]]
        vals += [li * a * nc, li * (1.0 - a) * nc, -li * a * nc, -li * (1.0 - a) * nc]
        nb = grid.edge_normal[be, c]
        rows += [k[be] + c * n]
        cols += [k[be]]
        vals += [lb * nb]
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * n, n),
    ).tocsr()


def jump_stabilization_matrix(grid: Grid, edge_mask=None) -> sp.csr_matrix:
    """Sum over selected interior edges of |sigma| d (e_k - e_l)(e_k - e_l)^T."""
    if edge_mask is None:
        selected = grid.interior_edges
    else:
        selected = np.flatnonzero(np.asarray(edge_mask, dtype=bool) & grid.interior_mask)
    k = grid.edge_cell_k[selected]
    l = grid.edge_cell_l[selected]
    w = (grid.edge_length * grid.edge_dist)[selected]
    rows = np.concatenate([k, l, k, l])
    cols = np.concatenate([k, l, l, k])
    vals = np.concatenate([w, w, -w, -w])
    n = grid.n_cells
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def vector_field_to_array(u: VectorField) -> np.ndarray:
    return np.concatenate([u.values[:, 0], u.values[:, 1]])


def array_to_vector_field(grid: Grid, x: np.ndarray) -> VectorField:
    n = grid.n_cells
    if x.shape != (2 * n,):
        raise GridError(f"expected stacked length {2 * n}, got {x.shape}")
    return VectorField(grid, np.column_stack([x[:n], x[n:]]))
