"""Command-line interface.

Subcommands:
  run          execute a configuration file end to end
  convergence  uniform-degree error/rate table over a mesh sequence
  compare      adaptive vs uniform twin runs on a scenario
  ode          standalone point-model trace (CSV of t,v)
  mesh-info    mesh statistics and shape-regularity report
  scenario     list or materialize catalog entries
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np


def _cmd_run(args):
    from .config import load_config
    from .runner import run_simulation

    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    summary = run_simulation(cfg)
    for key, val in summary.items():
        print(f"{key} = {val}")
    return 0


def _cmd_convergence(args):
    from .config import RunConfig
    from .io_vtk import write_csv
    from .polymesh import cvt_mesh
    from .scenarios import MESH_SPECS
    from .studies import convergence_study

    bounds = MESH_SPECS["test1a_desk"][0]
    meshes = []
    for n in args.cells:
        meshes.append(cvt_mesh(bounds, n, seed=args.seed, lloyd_iters=150))
    os.makedirs(args.out, exist_ok=True)
    mesh_paths = []
    from .mesh import write_mesh
    for n, mesh in zip(args.cells, meshes):
        path = os.path.join(args.out, f"conv_mesh_{n}.mesh")
        write_mesh(mesh, path)
        mesh_paths.append(path)
    cfg = RunConfig(mesh_path=mesh_paths[0], model="cubic", dt=args.dt,
                    t_end=args.t_end, materials={0: (0.1336, 0.0, 0.1336)},
                    ic_kind="wave", forcing_kind="manufactured",
                    quad_order=12, out_dir=args.out)
    tables = convergence_study(cfg, meshes, args.p)
    for p, rows in tables.items():
        data = [(r.h, r.ndof, r.error, r.rate if r.rate is not None else "")
                for r in rows]
        write_csv(os.path.join(args.out, f"convergence_p{p}.csv"),
                  "h,ndof,error,rate", data)
        print(f"p = {p}")
        for r in rows:
            rate = f"{r.rate:.2f}" if r.rate is not None else "  - "
            print(f"  h = {r.h:.4f}  ndof = {r.ndof:6d}  "
                  f"error = {r.error:.4e}  rate = {rate}")
    return 0


def _cmd_compare(args):
    from .io_vtk import write_csv
    from .scenarios import instantiate
    from .studies import adaptive_vs_uniform

    cfg = instantiate(args.scenario, args.workdir)
    snap_steps = tuple(int(round(t / cfg.dt)) for t in args.snapshots)
    res = adaptive_vs_uniform(cfg, snap_steps, tuple(args.steady_window))
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "comparison.csv"),
              "t,err_uniform,err_adaptive,ratio", res.snapshots)
    write_csv(os.path.join(args.out, "ndof_evolution.csv"), "t,v",
              res.ndof_series)
    print(f"uniform ndof = {res.ndof_uniform}")
    print(f"steady adaptive ndof = {res.ndof_steady:.0f} "
          f"({100 * res.ndof_steady / res.ndof_uniform:.1f}%)")
    print(f"final adaptive ndof = {res.ndof_final} "
          f"(3*Nel = {3 * res.n_cells})")
    for t, e_u, e_a, ratio in res.snapshots:
        print(f"t = {t:g} ms: uniform {e_u:.4e}  adaptive {e_a:.4e}  "
              f"ratio {ratio:.3f}")
    return 0


def _cmd_ode(args):
    from .io_vtk import write_csv
    from .ionic import (BarretoCressmanParams, ForcingSpec, IonicState,
                        integrate_0d)

    params = BarretoCressmanParams(k_bath=args.k_bath)
    forcing = ForcingSpec(args.amplitude) if args.amplitude > 0 else None
    trace = integrate_0d(params, args.u0, IonicState(), args.dt, args.t_end,
                         forcing=forcing)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    stride = max(1, int(round(args.sample_every / args.dt)))
    rows = list(zip(trace.t[::stride], trace.u[::stride]))
    write_csv(args.out, "t,v", rows)
    print(f"wrote {args.out} ({len(rows)} samples)")
    print(f"spike times (ms): {[round(s, 3) for s in trace.spike_times]}")
    print(f"gate clamp events: {trace.clamp_events}")
    return 0


def _cmd_mesh_info(args):
    from .geometry import element_geometry
    from .mesh import read_mesh, shape_regularity_report

    mesh = read_mesh(args.mesh)
    h = [element_geometry(mesh, k).diameter for k in range(mesh.n_cells)]
    areas = [element_geometry(mesh, k).area for k in range(mesh.n_cells)]
    print(f"vertices: {mesh.n_vertices}")
    print(f"cells: {mesh.n_cells}")
    print(f"faces: {len(mesh.faces)} "
          f"(interior {len(mesh.interior_faces())}, "
          f"boundary {len(mesh.boundary_faces())})")
    print(f"h: min {min(h):.5g}  max {max(h):.5g}")
    print(f"total area: {sum(areas):.9g}")
    labels, counts = np.unique(mesh.cell_material, return_counts=True)
    for label, count in zip(labels, counts):
        print(f"material {label}: {count} cells")
    rep = shape_regularity_report(mesh)
    print(f"min face/diameter ratio: {rep['min_face_over_diameter']:.4g}")
    print(f"median face/diameter ratio: {rep['median_face_over_diameter']:.4g}")
    return 0


def _cmd_scenario(args):
    from .scenarios import catalog_names, instantiate

    if args.name == "list":
        for name in catalog_names():
            print(name)
        return 0
    cfg = instantiate(args.name, args.workdir)
    print(f"materialized {args.name} in {args.workdir}")
    print(f"mesh: {cfg.mesh_path}")
    print(f"steps: {cfg.n_steps} x dt = {cfg.dt} ms")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monodg",
        description="p-adaptive DG solver for the monodomain equation "
                    "on polygonal meshes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.set_defaults(func=_cmd_run)

    p_conv = sub.add_parser("convergence", help="error/rate table")
    p_conv.add_argument("--p", type=int, nargs="+", default=[1, 2, 3])
    p_conv.add_argument("--cells", type=int, nargs="+",
                        default=[70, 150, 400, 850])
    p_conv.add_argument("--dt", type=float, default=1e-3)
    p_conv.add_argument("--t-end", type=float, default=0.1)
    p_conv.add_argument("--seed", type=int, default=11)
    p_conv.add_argument("--out", default="out/convergence")
    p_conv.set_defaults(func=_cmd_convergence)

    p_cmp = sub.add_parser("compare", help="adaptive vs uniform twin runs")
    p_cmp.add_argument("--scenario", default="test1b_desk")
    p_cmp.add_argument("--workdir", default=".")
    p_cmp.add_argument("--snapshots", type=float, nargs="+",
                       default=[5.0, 10.0])
    p_cmp.add_argument("--steady-window", type=float, nargs=2,
                       default=[5.0, 15.0])
    p_cmp.add_argument("--out", default="out/compare")
    p_cmp.set_defaults(func=_cmd_compare)

    p_ode = sub.add_parser("ode", help="standalone point-model trace")
    p_ode.add_argument("--k-bath", type=float, default=8.0)
    p_ode.add_argument("--amplitude", type=float, default=0.0)
    p_ode.add_argument("--u0", type=float, default=-50.0)
    p_ode.add_argument("--dt", type=float, default=1e-3)
    p_ode.add_argument("--t-end", type=float, default=100.0)
    p_ode.add_argument("--sample-every", type=float, default=0.05)
    p_ode.add_argument("--out", default="out/ode_trace.csv")
    p_ode.set_defaults(func=_cmd_ode)

    p_info = sub.add_parser("mesh-info", help="mesh statistics")
    p_info.add_argument("mesh")
    p_info.set_defaults(func=_cmd_mesh_info)

    p_scn = sub.add_parser("scenario", help="list/materialize catalog entries")
    p_scn.add_argument("name", help="'list' or a scenario name")
    p_scn.add_argument("--workdir", default=".")
    p_scn.set_defaults(func=_cmd_scenario)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
