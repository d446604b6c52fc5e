import numpy as np
import pytest

from stokes_fv import (
    ClusterError,
    ConfigError,
    SchemeSpec,
    ScalarField,
    VectorField,
    assemble,
    build_uniform,
    cell_means,
    energy_functional,
    make_clusters,
    solve,
)
from stokes_fv.assembly import export_system, load_system
from stokes_fv.operators import vector_field_to_array
from stokes_fv.verify import CASES, checkerboard_field


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SchemeSpec("unknown")
    with pytest.raises(ConfigError):
        SchemeSpec("bp")  # missing lambda
    with pytest.raises(ConfigError):
        SchemeSpec("cluster", -1.0)
    g = build_uniform(4)
    with pytest.raises(ClusterError):
        assemble(SchemeSpec("cluster", 1.0), g, lambda x, y: (0 * x, 0 * y))


def test_cell_means_constant_and_affine():
    g = build_uniform(2)
    for order in (1, 2, 3):
        f = cell_means(lambda x, y: (3.0 + 0 * x, -1.0 + 0 * y), g, order)
        np.testing.assert_allclose(f.values[:, 0], 3.0)
        np.testing.assert_allclose(f.values[:, 1], -1.0)
    f = cell_means(lambda x, y: (x, 0 * y), g, 1)
    np.testing.assert_allclose(f.values[:, 0], g.cell_centers[:, 0])


def test_cell_means_quadratic_matches_closed_form():
    g = build_uniform(2)
    f = cell_means(lambda x, y: (x**2, 0 * y), g, 3)
    xl = g.xs[g.cell_ij[:, 0]]
    xr = g.xs[g.cell_ij[:, 0] + 1]
    exact = (xr**3 - xl**3) / (3.0 * (xr - xl))
    np.testing.assert_allclose(f.values[:, 0], exact, atol=1e-14)


def test_zero_forcing_gives_zero_solution():
    g = build_uniform(4)
    part = make_clusters(g)
    for spec in (
        SchemeSpec("bp", 0.1),
        SchemeSpec("cluster", 1.0, part),
        SchemeSpec("cluster-constant", None, part),
    ):
        system = assemble(spec, g, lambda x, y: (0.0 * x, 0.0 * y))
        report = solve(system)
        assert not report.singular
        assert np.abs(report.u.values).max() < 1e-12
        assert np.abs(report.p.values).max() < 1e-12


def test_gradient_block_is_minus_divergence_transpose():
    g = build_uniform(4)
    system = assemble(SchemeSpec("bp", 0.1), g, CASES["ms1"].forcing)
    assert abs(system.G + system.B.T).max() < 1e-14


def test_system_block_structure(rng):
    g = build_uniform(4)
    part = make_clusters(g)
    system = assemble(SchemeSpec("cluster", 0.5, part), g, CASES["ms1"].forcing)
    n = g.n_cells
    # A symmetric positive definite
    a = system.A.toarray()
    np.testing.assert_allclose(a, a.T, atol=1e-15)
    assert np.linalg.eigvalsh(a).min() > 0
    # C symmetric positive semidefinite
    c = system.C.toarray()
    np.testing.assert_allclose(c, c.T, atol=1e-15)
    assert np.linalg.eigvalsh(c).min() > -1e-13
    # full matrix layout: [u1; u2; p; multiplier]
    assert system.matrix.shape == (3 * n + 1, 3 * n + 1)
    np.testing.assert_allclose(
        system.matrix.toarray()[-1, 2 * n : 3 * n], g.cell_areas
    )


def test_natural_checkerboard_gradient_boundary_support():
    g = build_uniform(4)
    system = assemble(SchemeSpec("natural"), g, CASES["ms1"].forcing)
    cb = checkerboard_field(g)
    load = system.G @ cb.values
    n = g.n_cells
    i, j = g.cell_ij.T
    boundary = (i == 0) | (i == g.nx - 1) | (j == 0) | (j == g.ny - 1)
    for c in range(2):
        comp = load[c * n : (c + 1) * n]
        assert np.abs(comp[~boundary]).max() < 1e-14
    assert np.abs(load).max() > 0.0


def test_energy_identity_bp_and_cluster():
    g = build_uniform(8)
    part = make_clusters(g)
    f = cell_means(CASES["ms1"].forcing, g)
    for spec in (SchemeSpec("bp", 0.05), SchemeSpec("cluster", 1.0, part)):
        system = assemble(spec, g, f)
        report = solve(system)
        assert not report.singular
        e_u, e_stab = energy_functional(system, report.u, report.p)
        work = float(system.rhs[: 2 * g.n_cells] @ vector_field_to_array(report.u))
        assert e_u + e_stab == pytest.approx(work, rel=1e-10)
        assert e_stab > 0.0


def test_energy_functional_zero_fields():
    g = build_uniform(4)
    system = assemble(SchemeSpec("bp", 0.1), g, CASES["ms1"].forcing)
    assert energy_functional(system, VectorField.zeros(g), ScalarField.zeros(g)) == (0.0, 0.0)


def test_nonsingular_across_kinds_and_grids():
    for n in (4, 6):
        g = build_uniform(n)
        part = make_clusters(g)
        f = cell_means(CASES["ms1"].forcing, g)
        for spec in (
            SchemeSpec("bp", 0.01),
            SchemeSpec("bp", 10.0),
            SchemeSpec("cluster", 0.1, part),
            SchemeSpec("cluster-constant", None, part),
        ):
            system = assemble(spec, g, f)
            report = solve(system)
            assert not report.singular, (spec.kind, spec.lam, report.singular_reason)
            assert report.residual_norm < 1e-10


def test_cluster_constant_pressure_space():
    g = build_uniform(4)
    part = make_clusters(g)
    system = assemble(SchemeSpec("cluster-constant", None, part), g, CASES["ms1"].forcing)
    assert system.n_p == part.n_clusters
    report = solve(system)
    # expanded pressure is constant over each cluster
    for gidx in range(part.n_clusters):
        members = part.members_of(gidx)
        vals = report.p.values[members]
        assert np.ptp(vals) < 1e-12


def test_export_and_import_round_trip(tmp_path):
    g = build_uniform(4)
    system = assemble(SchemeSpec("bp", 0.1), g, CASES["ms1"].forcing)
    export_system(system, tmp_path / "system.mtx", tmp_path / "rhs.csv")
    matrix, rhs = load_system(tmp_path / "system.mtx", tmp_path / "rhs.csv")
    assert abs(matrix - system.matrix).max() < 1e-15
    np.testing.assert_allclose(rhs, system.rhs, atol=1e-15)


def test_operator_matrix_matrixmarket_export(tmp_path):
    from scipy.io import mmread

    from stokes_fv import h1_stiffness_matrix
    from stokes_fv.assembly import export_matrix

    g = build_uniform(4)
    a = h1_stiffness_matrix(g)
    export_matrix(a, tmp_path / "stiffness.mtx")
    back = mmread(str(tmp_path / "stiffness.mtx"))
    assert abs(back - a).max() < 1e-15
