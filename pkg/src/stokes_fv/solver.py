"""Direct solution of the assembled saddle systems and spectral probes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .fields import ScalarField, VectorField, zero_mean_project
from .assembly import NATURAL, SaddleSystem
from .operators import array_to_vector_field


@dataclass
class SolveReport:
    """Solution fields plus diagnostics of one direct solve."""

    u: VectorField | None
    p: ScalarField | None
    multiplier: float
    residual_norm: float
    singular: bool
    singular_reason: str | None
    rcond_est: float | None
    stats: dict = field(default_factory=dict)


def _rcond_estimate(matrix: sp.csc_matrix, lu) -> float:
    norm1 = float(abs(matrix).sum(axis=0).max())
    inv_op = spla.LinearOperator(
        matrix.shape,
        matvec=lu.solve,
        rmatvec=lambda b: lu.solve(b, trans="T"),
        dtype=matrix.dtype,
    )
    inv_norm1 = float(spla.onenormest(inv_op))
    if norm1 == 0.0 or inv_norm1 == 0.0:
        return 0.0
    return 1.0 / (norm1 * inv_norm1)


def solve(
    system: SaddleSystem,
    tol: float = 1e-10,
    backend: str = "splu",
    rcond_floor: float = 1e-12,
) -> SolveReport:
    """Solve the saddle system by sparse direct factorization.

    The returned pressure has exactly zero area-weighted mean.  The report
    is flagged singular when the factorization fails, when the reciprocal
    condition estimate falls below `rcond_floor`, or when the system was
    assembled from the unstabilized cell-pressure scheme, whose checkerboard
    pressure mode loses control under refinement and must be surfaced rather
    than silently solved.  A flagged system may still carry the factored
    solution when one exists.
    """
    if tol <= 0:
        raise SolverError("tolerance must be positive")
    if backend not in ("splu", "spsolve"):
        raise SolverError(f"unknown backend {backend!r}")
    matrix = system.matrix.tocsc()
    rhs = system.rhs

    singular = False
    reason = None
    rcond = None
    stats: dict = {"backend": backend}
    x = None
    try:
        if backend == "splu":
            lu = spla.splu(matrix)
            x = lu.solve(rhs)
            rcond = _rcond_estimate(matrix, lu)
            stats["factor_nnz"] = int(lu.L.nnz + lu.U.nnz)
            stats["fill_factor"] = float((lu.L.nnz + lu.U.nnz) / max(matrix.nnz, 1))
            # one step of iterative refinement
            r = rhs - matrix @ x
            x = x + lu.solve(r)
        else:
            x = spla.spsolve(matrix, rhs)
    except RuntimeError as err:
        singular = True
        reason = f"factorization failed: {err}"

    if x is not None and not np.all(np.isfinite(x)):
        singular = True
        reason = reason or "factorization produced non-finite values"
        x = None

    if rcond is not None and rcond < rcond_floor:
        singular = True
        reason = reason or f"reciprocal condition estimate {rcond:.2e} below {rcond_floor:.0e}"

    if system.spec.kind == NATURAL:
        # Structurally unstable pressure space: no jump control, inf-sup
        # constant of the checkerboard mode decays under refinement.
        singular = True
        reason = (
            "unstabilized cell-pressure scheme: checkerboard pressure mode "
            "is not controlled (rcond_est="
            + (f"{rcond:.2e}" if rcond is not None else "n/a")
            + ")"
        )

    if x is None:
        return SolveReport(None, None, float("nan"), float("inf"), True, reason, rcond, stats)

    res = rhs - matrix @ x
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(res)) / (rhs_norm if rhs_norm > 0 else 1.0)
    if residual > tol and not singular:
        singular = True
        reason = f"relative residual {residual:.2e} above tolerance {tol:.0e}"

    n = system.grid.n_cells
    u = array_to_vector_field(system.grid, x[: 2 * n])
    p = zero_mean_project(system.cell_pressure(x[2 * n : 2 * n + system.n_p]))
    multiplier = float(x[-1])
    return SolveReport(u, p, multiplier, residual, singular, reason, rcond, stats)


def schur_smallest_eigen(system: SaddleSystem, dense_cap: int = 4096) -> float | None:
    """Smallest pressure Schur-complement eigenvalue on zero-mean pressures.

    Returns the squared inf-sup constant of the system's pressure space:
    the smallest eigenvalue of M^-1 (B A^-1 B^T) restricted to the subspace
    of zero area-weighted mean, with M the diagonal pressure mass matrix.
    Dense computation; `None` when the zero-mean space is trivial.
    """
    n_p = system.n_p
    if n_p > dense_cap:
        raise SolverError(f"pressure dimension {n_p} exceeds dense cap {dense_cap}")
    if n_p <= 1:
        return None
    lu = spla.splu(system.A.tocsc())
    bt = np.asarray(system.B.todense()).T  # (2n, n_p)
    x = lu.solve(bt)
    s_mat = np.asarray(system.B @ x)
    s_mat = 0.5 * (s_mat + s_mat.T)
    masses = system.mean_weights
    d_inv_sqrt = 1.0 / np.sqrt(masses)
    s_hat = s_mat * np.outer(d_inv_sqrt, d_inv_sqrt)
    # orthonormal basis of the zero-mean constraint in scaled variables
    w = np.sqrt(masses)
    basis = scipy.linalg.null_space(w[None, :])
    reduced = basis.T @ s_hat @ basis
    eigvals = scipy.linalg.eigvalsh(0.5 * (reduced + reduced.T))
    return float(eigvals[0])
