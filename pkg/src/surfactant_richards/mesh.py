"""Structured P1 triangulations of the unit square."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np

INTERIOR, NEUMANN, DIRICHLET = 0, 1, 2


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights (weights sum to one)."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


# Edge-midpoint rule, exact for quadratics.
EDGE_MIDPOINT = QuadratureRule(
    points=np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
    weights=np.full(3, 1.0 / 3.0),
    degree=2,
)


@dataclass(frozen=True, eq=False)
class MeshP1:
    """Triangulated unit square.

    ``tags`` holds one of INTERIOR, NEUMANN, DIRICHLET per node. Geometry
    and the CSR sparsity pattern are computed lazily and cached.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    h: float
    tags: np.ndarray
    m: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        x, y = self.nodes.T
        tol = 1e-12
        return (x < tol) | (x > 1 - tol) | (y < tol) | (y > 1 - tol)

    @property
    def dirichlet_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.tags == DIRICHLET)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def gradients(self) -> np.ndarray:
        """Constant barycentric gradients, shape (n_triangles, 3, 2)."""
        p = self.nodes[self.triangles]
        area2 = 2.0 * self.areas
        if np.any(area2 <= 0.0):
            raise ValueError("degenerate or negatively oriented triangle")
        g = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / area2
            g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / area2
        return g

    @cached_property
    def csr_pattern(self):
        """CSR ``(indptr, indices)`` plus per-element positions, shape (n_triangles, 9)."""
        t = self.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        n = self.n_nodes
        keys = rows * n + cols
        unique = np.unique(keys)
        pos = np.searchsorted(unique, keys)
        indices = unique % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(unique // n, minlength=n), out=indptr[1:])
        return indptr, indices, pos.reshape(-1, 9)

    def quadrature_coordinates(self, rule: QuadratureRule = EDGE_MIDPOINT) -> np.ndarray:
        """Physical quadrature points, shape (n_triangles, n_q, 2)."""
        return np.einsum("qi,tid->tqd", rule.points, self.nodes[self.triangles])

    def interpolate_to_quadrature(self, field, rule: QuadratureRule = EDGE_MIDPOINT) -> np.ndarray:
        return np.asarray(field)[self.triangles] @ rule.points.T

    def element_data(self, triangle: int):
        """Return ``(area, gradients)`` for one triangle."""
        if not 0 <= triangle < self.n_triangles:
            raise IndexError("triangle index out of range")
        return float(self.areas[triangle]), self.gradients[triangle].copy()


def build_unit_square_mesh(m: int) -> MeshP1:
    """Split each of the m x m squares along its lower-left/upper-right diagonal."""
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise ValueError("m must be an integer >= 2")
    m = int(m)
    xs = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(xs, xs)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(m), np.arange(m))
    n0 = (j * (m + 1) + i).ravel()
    n1 = n0 + 1
    n2 = n0 + m + 2
    n3 = n0 + m + 1
    tris = np.empty((2 * m * m, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([n0, n1, n2])
    tris[1::2] = np.column_stack([n0, n2, n3])
    mesh = MeshP1(nodes=nodes, triangles=tris, h=math.sqrt(2.0) / m,
                  tags=np.zeros(len(nodes), dtype=np.int8), m=m)
    tags = np.where(mesh.boundary_mask, NEUMANN, INTERIOR).astype(np.int8)
    return replace(mesh, tags=tags)


def classify_boundary(mesh: MeshP1, dirichlet: Callable[[np.ndarray, np.ndarray], np.ndarray] | None) -> MeshP1:
    """Tag boundary nodes selected by ``dirichlet(x, y)`` as Dirichlet, the rest Neumann."""
    tags = np.where(mesh.boundary_mask, NEUMANN, INTERIOR).astype(np.int8)
    if dirichlet is not None:
        x, y = mesh.nodes.T
        sel = np.asarray(dirichlet(x, y), dtype=bool) & mesh.boundary_mask
        tags[sel] = DIRICHLET
    return replace(mesh, tags=tags)


def top_edge(x, y):
    return np.abs(y - 1.0) < 1e-12


def whole_boundary(x, y):
    return np.ones_like(x, dtype=bool)


def nearest_node(mesh: MeshP1, point) -> int:
    px, py = point
    if not (0.0 <= px <= 1.0 and 0.0 <= py <= 1.0):
        raise ValueError(f"point {point} outside the unit square")
    d = (mesh.nodes[:, 0] - px) ** 2 + (mesh.nodes[:, 1] - py) ** 2
    return int(np.argmin(d))
