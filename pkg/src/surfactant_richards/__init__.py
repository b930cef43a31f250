"""Iterative linearization schemes for coupled Richards flow and surfactant transport."""
from .constitutive import VanGenuchtenParams
from .kernels import BACKEND
from .mesh import MeshP1, build_unit_square_mesh

__all__ = ["BACKEND", "MeshP1", "VanGenuchtenParams", "build_unit_square_mesh"]
__version__ = "0.1.0"
