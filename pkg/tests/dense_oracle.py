"""Independent dense assembly of the uniform-grid schemes.

Loops over cells with explicit (i, j) neighbour indexing and writes the
textbook cell-update formulas of the collocated schemes straight into dense
arrays.  Shares nothing with the sparse edge-based assembly beyond the grid
coordinates; used to cross-check the production assembly entrywise.
"""

import numpy as np


def dense_assemble_uniform(n, kind, lam=None):
    """Dense saddle matrix and layout for a uniform n-by-n unit-square grid.

    kind: 'natural', 'bp' or 'cluster'.  Rows are scaled by the cell area
    h^2, unknowns ordered [u1; u2; p; multiplier], and the zero-mean
    constraint carries the cell areas.  Returns the (N, N) dense matrix.
    """
    h = 1.0 / n
    nc = n * n
    size = 3 * nc + 1

    def idx(i, j):
        return j * n + i

    def neighbours(i, j):
        out = []
        if i > 0:
            out.append((idx(i - 1, j), (-1.0, 0.0)))
        if i < n - 1:
            out.append((idx(i + 1, j), (1.0, 0.0)))
        if j > 0:
            out.append((idx(i, j - 1), (0.0, -1.0)))
        if j < n - 1:
            out.append((idx(i, j + 1), (0.0, 1.0)))
        return out

    def boundary_normals(i, j):
        out = []
        if i == 0:
            out.append((-1.0, 0.0))
        if i == n - 1:
            out.append((1.0, 0.0))
        if j == 0:
            out.append((0.0, -1.0))
        if j == n - 1:
            out.append((0.0, 1.0))
        return out

    mat = np.zeros((size, size))
    for j in range(n):
        for i in range(n):
            k = idx(i, j)
            nbrs = neighbours(i, j)
            bnds = boundary_normals(i, j)
            # momentum rows, h^2 * [ (-lap u)_K + (grad p)_K ] per component
            for c in range(2):
                row = c * nc + k
                # h^2 (-lap u)_K = sum (u_K - u_L) + 2 sum_ext u_K
                for l, _ in nbrs:
                    mat[row, c * nc + k] += 1.0
                    mat[row, c * nc + l] -= 1.0
                mat[row, c * nc + k] += 2.0 * len(bnds)
                # h^2 (grad p)_K = sum h (p_K + p_L)/2 n + sum_ext h p_K n
                for l, normal in nbrs:
                    mat[row, 2 * nc + k] += h * 0.5 * normal[c]
                    mat[row, 2 * nc + l] += h * 0.5 * normal[c]
                for normal in bnds:
                    mat[row, 2 * nc + k] += h * normal[c]
            # mass row, h^2 * [ (div u)_K + T_S ]
            row = 2 * nc + k
            for l, normal in nbrs:
                for c in range(2):
                    mat[row, c * nc + k] += h * 0.5 * normal[c]
                    mat[row, c * nc + l] += h * 0.5 * normal[c]
            if kind == "bp":
                # h^2 * lambda h^2 (-lap_S p)_K = lambda h^2 sum (p_K - p_L)
                for l, _ in nbrs:
                    mat[row, 2 * nc + k] += lam * h * h
                    mat[row, 2 * nc + l] -= lam * h * h
            elif kind == "cluster":
                # same jump sum restricted to edges inside the 2x2 cluster
                for l, _ in nbrs:
                    li, lj = l % n, l // n
                    if (li // 2, lj // 2) == (i // 2, j // 2):
                        mat[row, 2 * nc + k] += lam * h * h
                        mat[row, 2 * nc + l] -= lam * h * h
            elif kind != "natural":
                raise ValueError(f"unsupported kind {kind!r}")
            # multiplier column and zero-mean constraint row (area weights)
            mat[row, 3 * nc] = h * h
            mat[3 * nc, row] = h * h
    return mat


def dense_rhs_uniform(n, f_cells):
    """Dense right-hand side: h^2 f_K stacked per component, zeros after."""
    h = 1.0 / n
    nc = n * n
    rhs = np.zeros(3 * nc + 1)
    rhs[:nc] = h * h * f_cells[:, 0]
    rhs[nc : 2 * nc] = h * h * f_cells[:, 1]
    return rhs
