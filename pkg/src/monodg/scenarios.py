"""Shipped scenario catalog: named configurations reproducing each
benchmark at desk scale (CI-sized) and full scale.

Catalog entries are config files under ``monodg/catalog``; meshes are
generated deterministically on first use, so instantiating an entry
materializes its mesh file and returns the validated configuration.
"""
from __future__ import annotations

import os
from importlib import resources

from .config import RunConfig, load_config
from .polymesh import generate_mesh_file

# mesh recipe per entry: bounds, cells, seed, lloyd sweeps, material rule
MESH_SPECS = {
    "test1a_desk": ((-1.0, -0.5, 2.0, 0.5), 400, 11, 150, None),
    "test1b_desk": ((-1.0, -0.5, 2.5, 0.5), 380, 7, 120, None),
    "test1c_desk": ((-1.0, -0.5, 2.5, 0.5), 380, 7, 120, None),
    "test1b_full": ((-2.0, -0.5, 3.0, 0.5), 1500, 3, 80, None),
    "test2a_desk": ((-1.0, -0.5, 2.0, 0.5), 380, 9, 120, None),
    "test2a_full": ((-2.0, -0.5, 4.0, 0.5), 1500, 3, 80, None),
    "test2b_desk": ((-1.0, -0.5, 2.0, 0.5), 380, 9, 120,
                    lambda c: 1 if c[0] > 0.6 else 0),
    "test2b_full": ((-2.0, -0.5, 4.0, 0.5), 1500, 3, 80,
                     lambda c: 1 if c[0] > 1.0 else 0),
    "test3_desk": ((0.0, 0.0, 2.0, 2.0), 600, 13, 100, None),
    "test3_full": ((0.0, 0.0, 3.2, 3.2), 2500, 13, 60, None),
    "test4_synthetic_desk": ((-1.0, -0.5, 2.6, 0.5), 380, 7, 120,
                             lambda c: 1 if c[0] > 1.8 else 0),
}

def catalog_names() -> list[str]:
    return sorted(MESH_SPECS)


def _catalog_text(name: str) -> str:
    ref = resources.files("monodg").joinpath(f"catalog/{name}.cfg")
    return ref.read_text(encoding="utf-8")


def ensure_mesh(name: str, workdir: str) -> str:
    """Generate (once) and return the mesh file path for an entry."""
    if name not in MESH_SPECS:
        raise KeyError(f"unknown scenario {name!r}; known: {catalog_names()}")
    bounds, n_cells, seed, lloyd, material_of = MESH_SPECS[name]
    mesh_dir = os.path.join(workdir, "meshes")
    os.makedirs(mesh_dir, exist_ok=True)
    path = os.path.join(mesh_dir, f"{name}.mesh")
    if not os.path.exists(path):
        generate_mesh_file(path, bounds, n_cells, seed=seed,
                           lloyd_iters=lloyd, material_of=material_of)
    return path


def instantiate(name: str, workdir: str = ".") -> RunConfig:
    """Materialize one catalog entry: mesh file, config file, and the
    parsed configuration bound to ``workdir``."""
    if name not in MESH_SPECS:
        raise KeyError(f"unknown scenario {name!r}; known: {catalog_names()}")
    ensure_mesh(name, workdir)
    cfg_path = os.path.join(workdir, f"{name}.cfg")
    if not os.path.exists(cfg_path):
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(_catalog_text(name))
    return load_config(cfg_path)
