"""p-adaptive discontinuous Galerkin solver for the monodomain equation
on polygonal meshes, with local error indicators driving dynamic
per-element polynomial degrees."""

__version__ = "0.1.0"
