"""Command-line front end: solve, convergence studies, stability probes.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Flags override config-file keys; the config file is JSON.  The default
output directory is taken from the STOKES_FV_OUT environment variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import assembly, verify
from .assembly import SchemeSpec, assemble, cell_means, energy_functional
from .errors import ClusterError, ConfigError, GridError, SolverError, StokesFVError
from .fields import _fmt, write_scalar_csv, write_vector_csv
from .grid import build_uniform, cluster_regularity, make_clusters, parse_grid_config
from .solver import schur_smallest_eigen, solve
from .verify import CASES

_SCHEMES = assembly.SCHEME_KINDS


def _parse_n_list(text) -> list[int]:
    if text is None:
        raise ConfigError("missing refinement list (--n)")
    if isinstance(text, (list, tuple)):
        values = [int(v) for v in text]
    else:
        parts = [p for p in str(text).split(",") if p.strip()]
        values = [int(p) for p in parts]
    if not values:
        raise ConfigError("empty refinement list")
    return values


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("config file must contain a JSON object")
    return cfg


def _setting(args, cfg, key, default=None):
    val = getattr(args, key.replace(".", "_").replace("-", "_"), None)
    if val is not None:
        return val
    cur = cfg
    for part in key.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return default
        cur = cur[part]
    return cur


def _out_dir(args, cfg) -> Path:
    out = _setting(args, cfg, "out") or os.environ.get("STOKES_FV_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_grid(args, cfg):
    grid_text = _setting(args, cfg, "grid")
    n = _setting(args, cfg, "n")
    if grid_text:
        return parse_grid_config(str(grid_text))
    if n is None:
        raise ConfigError("need --grid or --n")
    if isinstance(n, str) and "," in n:
        raise ConfigError("solve takes a single n; use convergence for sweeps")
    return build_uniform(int(n))


def _build_spec(args, cfg, grid) -> SchemeSpec:
    kind = _setting(args, cfg, "scheme")
    if kind is None:
        raise ConfigError("missing scheme (--scheme)")
    if kind not in _SCHEMES:
        raise ConfigError(f"unknown scheme {kind!r}; choose from {_SCHEMES}")
    lam = _setting(args, cfg, "lam", _setting(args, cfg, "lambda"))
    lam = None if lam is None else float(lam)
    partition = None
    if kind in ("cluster", "cluster-constant"):
        partition = make_clusters(grid)
    return SchemeSpec(kind, lam, partition)


def _get_case(args, cfg):
    case_id = _setting(args, cfg, "case", "ms1")
    if case_id not in CASES:
        raise ConfigError(f"unknown case {case_id!r}; choose from {sorted(CASES)}")
    return CASES[case_id]


def _write_summary(path, items) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["key", "value"])
        for key, value in items:
            if isinstance(value, float):
                value = _fmt(value)
            out.writerow([key, value])


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    grid = _build_grid(args, cfg)
    spec = _build_spec(args, cfg, grid)
    case = _get_case(args, cfg)
    quad = int(_setting(args, cfg, "quad", 3))
    tol = float(_setting(args, cfg, "tol", _setting(args, cfg, "solver.tol", 1e-10)))
    backend = str(_setting(args, cfg, "backend", _setting(args, cfg, "solver.backend", "splu")))
    out = _out_dir(args, cfg)

    f_cells = cell_means(case.forcing, grid, quad)
    system = assemble(spec, grid, f_cells)
    report = solve(system, tol=tol, backend=backend)

    if args.dump_system:
        assembly.export_system(system, out / "system.mtx", out / "rhs.csv")

    summary = [
        ("scheme", spec.kind),
        ("lambda", "" if spec.lam is None else spec.lam),
        ("case", case.id),
        ("nx", grid.nx),
        ("ny", grid.ny),
        ("h", grid.h if grid.is_uniform else ""),
        ("residual_norm", report.residual_norm),
        ("multiplier", report.multiplier),
        ("singular", report.singular),
        ("singular_reason", report.singular_reason or ""),
        ("rcond_est", "" if report.rcond_est is None else report.rcond_est),
    ]
    if report.u is not None:
        energy_u, energy_stab = energy_functional(system, report.u, report.p)
        summary += [("energy_velocity_sq", energy_u), ("energy_stab_sq", energy_stab)]
        write_vector_csv(report.u, out / "u.csv")
        write_scalar_csv(report.p, out / "p.csv")
    _write_summary(out / "summary.csv", summary)

    if report.singular:
        print(f"singular system: {report.singular_reason}", file=sys.stderr)
        return 3
    return 0


def cmd_convergence(args) -> int:
    cfg = _load_config(args.config)
    n_list = _parse_n_list(_setting(args, cfg, "n"))
    case = _get_case(args, cfg)
    kind = _setting(args, cfg, "scheme")
    if kind is None:
        raise ConfigError("missing scheme (--scheme)")
    lam = _setting(args, cfg, "lam", _setting(args, cfg, "lambda"))
    lam = None if lam is None else float(lam)
    quad = int(_setting(args, cfg, "quad", 3))
    tol = float(_setting(args, cfg, "tol", _setting(args, cfg, "solver.tol", 1e-10)))
    out = _out_dir(args, cfg)

    # the per-level partition is built inside run_convergence
    probe_grid = build_uniform(min(n_list))
    spec = SchemeSpec(kind, lam, make_clusters(probe_grid) if kind in ("cluster", "cluster-constant") else None)
    table = verify.run_convergence(spec, case, n_list, quad_order=quad, tol=tol)
    table.to_csv(out / "convergence.csv")
    for row in table.rows:
        print(
            f"n={row.n:4d} err_u={row.err_u_h1:.6e} err_p={row.err_p_l2:.6e}"
            + (f" order_u={row.order_u:.3f} order_p={row.order_p:.3f}" if row.order_u else "")
        )
    return 0


def cmd_probe(args) -> int:
    cfg = _load_config(args.config)
    what = _setting(args, cfg, "what")
    out = _out_dir(args, cfg)
    tol = float(_setting(args, cfg, "tol", _setting(args, cfg, "solver.tol", 1e-10)))

    if what == "checkerboard":
        n_list = _parse_n_list(_setting(args, cfg, "n"))
        rows, exponent = verify.checkerboard_sweep(n_list)
        verify.write_checkerboard_csv(rows, exponent, out / "probe_checkerboard.csv")
        print(f"fitted decay exponent: {exponent:.4f}")
        return 0

    if what == "infsup":
        n_list = _parse_n_list(_setting(args, cfg, "n"))
        space = _setting(args, cfg, "space", "cluster")
        if space not in ("full", "cluster"):
            raise ConfigError("--space must be 'full' or 'cluster'")
        rows = []
        for n in n_list:
            grid = build_uniform(n)
            if space == "cluster":
                spec = SchemeSpec("cluster-constant", None, make_clusters(grid))
            else:
                spec = SchemeSpec("natural")
            system = assemble(spec, grid, lambda x, y: (0.0 * x, 0.0 * y), quad_order=1)
            beta_sq = schur_smallest_eigen(system)
            beta = math.sqrt(beta_sq) if beta_sq is not None else float("nan")
            rows.append({"space": space, "n": n, "h": 1.0 / n, "beta_h": beta})
            print(f"n={n:4d} beta_h={beta:.6f}")
        verify.write_infsup_csv(rows, out / "probe_infsup.csv")
        return 0

    if what == "consistency":
        grid_text = _setting(args, cfg, "grid")
        if grid_text is None:
            raise ConfigError("consistency probe needs --grid")
        grid = parse_grid_config(str(grid_text))
        report = verify.consistency_check(grid)
        verify.write_consistency_csv(str(grid_text), report, out / "probe_consistency.csv")
        print(
            f"max interior defect {report.max_interior_defect:.3e}, "
            f"boundary defect {report.max_boundary_defect:.3e}"
        )
        return 0

    if what == "regularity":
        n_list = _parse_n_list(_setting(args, cfg, "n"))
        rows = []
        for n in n_list:
            grid = build_uniform(n)
            value = cluster_regularity(grid, make_clusters(grid))
            rows.append((f"uniform n={n}", value))
            print(f"n={n:4d} criterion={value:.6f}")
        verify.write_regularity_csv(rows, out / "probe_regularity.csv")
        return 0

    raise ConfigError(f"unknown probe {what!r}")


def _add_common(parser) -> None:
    parser.add_argument("--config", help="JSON config file; flags take precedence")
    parser.add_argument("--grid", help="'uniform n=<int>' or JSON {'x':[...],'y':[...]}")
    parser.add_argument("--n", help="cells per side, or comma list for sweeps")
    parser.add_argument("--out", help="output directory (default $STOKES_FV_OUT or .)")
    parser.add_argument("--tol", type=float, help="solver relative residual tolerance")
    parser.add_argument("--quad", type=int, help="Gauss points per direction for forcing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stokes-fv",
        description="Collocated finite-volume schemes for the 2D Stokes problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="assemble and solve one configuration")
    _add_common(p_solve)
    p_solve.add_argument("--scheme", choices=_SCHEMES)
    p_solve.add_argument("--lambda", dest="lam", type=float, help="stabilization strength")
    p_solve.add_argument("--case", choices=sorted(CASES))
    p_solve.add_argument("--backend", choices=("splu", "spsolve"))
    p_solve.add_argument("--dump-system", action="store_true", help="export MatrixMarket + rhs")
    p_solve.set_defaults(fn=cmd_solve)

    p_conv = sub.add_parser("convergence", help="refinement study with observed orders")
    _add_common(p_conv)
    p_conv.add_argument("--scheme", choices=_SCHEMES)
    p_conv.add_argument("--lambda", dest="lam", type=float)
    p_conv.add_argument("--case", choices=sorted(CASES))
    p_conv.set_defaults(fn=cmd_convergence)

    p_probe = sub.add_parser("probe", help="stability and consistency diagnostics")
    _add_common(p_probe)
    p_probe.add_argument(
        "--what", choices=("checkerboard", "infsup", "consistency", "regularity")
    )
    p_probe.add_argument("--space", choices=("full", "cluster"))
    p_probe.set_defaults(fn=cmd_probe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, GridError, ClusterError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (SolverError, StokesFVError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
