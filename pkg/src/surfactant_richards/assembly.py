"""P1 assembly of weighted mass, stiffness, convection and load terms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .constitutive import VanGenuchtenParams, conductivity_of_state
from .mesh import MeshP1

E_Z = np.array([0.0, 1.0])


def as_quadrature(mesh: MeshP1, w) -> np.ndarray:
    """Broadcast a scalar, nodal or per-quadrature-point field to shape (n_triangles, 3)."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        return np.full((mesh.n_triangles, 3), float(w))
    if w.shape == (mesh.n_nodes,):
        return mesh.interpolate_to_quadrature(w)
    if w.shape == (mesh.n_triangles, 3):
        return w
    if w.shape == (mesh.n_triangles,):
        return np.repeat(w[:, None], 3, axis=1)
    raise ValueError(f"cannot interpret coefficient of shape {w.shape}")


def _csr(mesh: MeshP1, data) -> sp.csr_matrix:
    indptr, indices, _ = mesh.csr_pattern
    n = mesh.n_nodes
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def assemble_weighted_mass(mesh: MeshP1, weight=1.0) -> sp.csr_matrix:
    """M_ij = int w phi_i phi_j."""
    _, indices, pos = mesh.csr_pattern
    data = kernels.mass_data(mesh.areas, as_quadrature(mesh, weight), pos, len(indices))
    return _csr(mesh, data)


_MASS_CACHE: dict = {}


def unit_mass(mesh: MeshP1) -> sp.csr_matrix:
    """Unit-weight mass matrix, cached for the most recently used mesh."""
    hit = _MASS_CACHE.get(id(mesh))
    if hit is None or hit[0] is not mesh:
        hit = (mesh, assemble_weighted_mass(mesh, 1.0))
        _MASS_CACHE.clear()
        _MASS_CACHE[id(mesh)] = hit
    return hit[1]


def assemble_weighted_stiffness(mesh: MeshP1, conductivity=1.0) -> sp.csr_matrix:
    """A_ij = int K grad phi_i . grad phi_j."""
    _, indices, pos = mesh.csr_pattern
    data = kernels.stiffness_data(mesh.areas, mesh.gradients, as_quadrature(mesh, conductivity),
                                  pos, len(indices))
    return _csr(mesh, data)


def assemble_advection(mesh: MeshP1, vector, weight=1.0) -> sp.csr_matrix:
    """B_ij = int w phi_j (v . grad phi_i) for a per-triangle constant vector v."""
    _, indices, pos = mesh.csr_pattern
    vec = np.array(np.broadcast_to(np.asarray(vector, dtype=float), (mesh.n_triangles, 2)))
    data = kernels.advection_data(mesh.areas, mesh.gradients, vec,
                                  as_quadrature(mesh, weight), pos, len(indices))
    return _csr(mesh, data)


def assemble_convection(mesh: MeshP1, flux) -> sp.csr_matrix:
    """C_ij = int (u phi_j) . grad phi_i."""
    return assemble_advection(mesh, flux, 1.0)


def assemble_gravity_load(mesh: MeshP1, conductivity=1.0) -> np.ndarray:
    """b_i = int K e_z . grad phi_i, with e_z pointing up (+y)."""
    return kernels.flux_load(mesh.areas, mesh.gradients, as_quadrature(mesh, conductivity),
                             E_Z, mesh.triangles, mesh.n_nodes)


def assemble_source(mesh: MeshP1, f) -> np.ndarray:
    """b_i = int f phi_i."""
    return kernels.source_load(mesh.areas, as_quadrature(mesh, f), mesh.triangles, mesh.n_nodes)


def element_gradient(mesh: MeshP1, field) -> np.ndarray:
    """Per-triangle gradient of a nodal P1 field, shape (n_triangles, 2)."""
    return np.einsum("ti,tid->td", np.asarray(field, dtype=float)[mesh.triangles], mesh.gradients)


def compute_water_flux(mesh: MeshP1, psi, c, params: VanGenuchtenParams) -> np.ndarray:
    """Darcy flux -K(theta(psi_T, c_T)) (grad psi + e_z) with element-mean psi_T, c_T."""
    psi = np.asarray(psi, dtype=float)
    c = np.asarray(c, dtype=float)
    psi_bar = psi[mesh.triangles].mean(axis=1)
    c_bar = c[mesh.triangles].mean(axis=1)
    K = conductivity_of_state(psi_bar, c_bar, params)
    return -K[:, None] * (element_gradient(mesh, psi) + E_Z)


@dataclass
class SparseSystem:
    """Linear system on the free degrees of freedom.

    ``expand`` maps a free-DOF solution back to the full vector with the
    prescribed values reinserted.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    size: int

    def expand(self, x_free) -> np.ndarray:
        x = np.empty(self.size)
        x[self.free] = x_free
        x[self.fixed] = self.fixed_values
        return x


def apply_dirichlet(matrix, rhs, nodes, values, allowed=None) -> SparseSystem:
    """Eliminate prescribed DOFs, moving their contribution to the right-hand side.

    ``allowed``, when given, lists the DOFs that may carry prescribed values.
    """
    matrix = sp.csr_matrix(matrix)
    n = matrix.shape[0]
    nodes = np.asarray(nodes, dtype=np.int64).ravel()
    values = np.broadcast_to(np.asarray(values, dtype=float), nodes.shape).copy()
    if allowed is not None:
        bad = np.setdiff1d(nodes, np.asarray(allowed))
        if bad.size:
            raise ValueError(f"Dirichlet value given for non-Dirichlet DOFs {bad[:5].tolist()}")
    order = np.argsort(nodes)
    nodes, values = nodes[order], values[order]
    if np.any(np.diff(nodes) == 0):
        raise ValueError("duplicate Dirichlet DOF")
    mask = np.ones(n, dtype=bool)
    mask[nodes] = False
    free = np.flatnonzero(mask)
    x_fixed = np.zeros(n)
    x_fixed[nodes] = values
    reduced_rhs = (np.asarray(rhs, dtype=float) - matrix @ x_fixed)[free]
    reduced = matrix[free][:, free].tocsr()
    reduced.eliminate_zeros()
    return SparseSystem(reduced, reduced_rhs, free, nodes, values, n)
