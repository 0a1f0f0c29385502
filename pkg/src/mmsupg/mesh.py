"""Triangulations of the unit square.

A :class:`TriMesh` is immutable: mesh movement produces a new mesh with the
same connectivity through :meth:`TriMesh.with_vertices`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElementError, InvalidArgumentError

LEFT, RIGHT, BOTTOM, TOP = 0, 1, 2, 3
SIDE_NAMES = ("left", "right", "bottom", "top")

INTERIOR, EDGE, CORNER = 0, 1, 2

INFLOW, OUTFLOW = 0, 1

DEGENERATE_AREA = 1e-14

# Unit right triangle used for basis functions and quadrature.
FEM_REFERENCE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

_EQ_SIDE = 2.0 / 3.0 ** 0.25
# Equilateral triangle of unit area used by the mesh energy.
MMPDE_REFERENCE = np.array(
    [[0.0, 0.0], [_EQ_SIDE, 0.0], [0.5 * _EQ_SIDE, 0.5 * np.sqrt(3.0) * _EQ_SIDE]]
)

_REFERENCES = {"fem": FEM_REFERENCE, "mmpde": MMPDE_REFERENCE}


@dataclass(frozen=True)
class AffineMap:
    """Affine map ``x = origin + jacobian @ xi`` from a reference triangle."""

    jacobian: np.ndarray
    inverse_jacobian: np.ndarray
    det_jacobian: float
    origin: np.ndarray

    def __call__(self, xi):
        return self.origin + np.asarray(xi) @ self.jacobian.T

    def inverse(self, x):
        return (np.asarray(x) - self.origin) @ self.inverse_jacobian.T


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh with boundary tags and cached connectivity.

    ``boundary_edges`` rows are oriented as in their (counterclockwise)
    triangle, so the outward normal of edge ``(a, b)`` is ``(dy, -dx)``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    vertex_flags: np.ndarray
    vertex_side: np.ndarray
    _topology: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_tags",
                     "vertex_flags", "vertex_side"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.triangles)

    def with_vertices(self, vertices):
        """Same connectivity, new coordinates. Topology caches are shared."""
        vertices = np.array(vertices, dtype=float)
        if vertices.shape != self.vertices.shape:
            raise InvalidArgumentError("vertex array shape mismatch")
        return TriMesh(vertices, self.triangles, self.boundary_edges,
                       self.boundary_tags, self.vertex_flags, self.vertex_side,
                       self._topology)

    # geometry -----------------------------------------------------------
    def corners(self):
        """Element vertex coordinates, shape (N, 3, 2)."""
        return self.vertices[self.triangles]

    def edge_matrices(self):
        """Columns x1 - x0 and x2 - x0 per element, shape (N, 2, 2)."""
        p = self.corners()
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    def signed_areas(self):
        p = self.corners()
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def areas(self):
        return self.signed_areas()

    def diameters(self):
        p = self.corners()
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        return np.sqrt((e ** 2).sum(axis=2)).max(axis=1)

    def boundary_length(self):
        a, b = self.boundary_edges.T
        return float(np.linalg.norm(self.vertices[b] - self.vertices[a], axis=1).sum())

    def boundary_normals(self):
        a, b = self.boundary_edges.T
        d = self.vertices[b] - self.vertices[a]
        n = np.stack([d[:, 1], -d[:, 0]], axis=1)
        return n / np.linalg.norm(n, axis=1)[:, None]

    def boundary_vertices(self):
        return np.flatnonzero(self.vertex_flags != INTERIOR)

    # topology -----------------------------------------------------------
    def element_neighbors(self):
        """(N, 3) array; entry i is the triangle across the edge opposite
        local vertex i, or -1 on the boundary."""
        if "neighbors" not in self._topology:
            self._topology["neighbors"] = _element_neighbors(self.triangles)
        return self._topology["neighbors"]

    def vertex_neighbors(self):
        """Edge-adjacent vertices as (offsets, indices) in compressed form."""
        if "vneigh" not in self._topology:
            tri = self.triangles
            pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
            pairs = np.concatenate([pairs, pairs[:, ::-1]])
            pairs = np.unique(pairs, axis=0)
            offsets = np.searchsorted(pairs[:, 0], np.arange(self.n_vertices + 1))
            self._topology["vneigh"] = (offsets, pairs[:, 1].copy())
        return self._topology["vneigh"]

    def vertex_elements(self):
        """One incident element per vertex (used to seed point location)."""
        if "vel" not in self._topology:
            first = np.full(self.n_vertices, -1, dtype=np.int64)
            flat = self.triangles.ravel()
            elems = np.repeat(np.arange(self.n_elements), 3)
            first[flat[::-1]] = elems[::-1]
            self._topology["vel"] = first
        return self._topology["vel"]

    def check(self, tol=1e-12):
        """Raise if structural invariants fail; return total area."""
        if self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices:
            raise InvalidArgumentError("triangle vertex index out of range")
        a = self.signed_areas()
        if np.any(a <= 0):
            raise DegenerateElementError(f"{int((a <= 0).sum())} elements with non-positive area")
        total = float(a.sum())
        if abs(total - 1.0) > tol:
            raise InvalidArgumentError(f"total area {total!r} differs from 1")
        return total


def _element_neighbors(triangles):
    n = len(triangles)
    local = [(1, 2), (2, 0), (0, 1)]
    keys = []
    for i, (a, b) in enumerate(local):
        e = np.sort(triangles[:, [a, b]], axis=1)
        keys.append(np.column_stack([e, np.arange(n), np.full(n, i)]))
    keys = np.concatenate(keys)
    order = np.lexsort((keys[:, 1], keys[:, 0]))
    keys = keys[order]
    same = np.all(keys[1:, :2] == keys[:-1, :2], axis=1)
    nb = np.full((n, 3), -1, dtype=np.int64)
    idx = np.flatnonzero(same)
    a, b = keys[idx], keys[idx + 1]
    nb[a[:, 2], a[:, 3]] = b[:, 2]
    nb[b[:, 2], b[:, 3]] = a[:, 2]
    return nb


def generate_uniform(n):
    """Structured mesh of [0,1]^2 with ``n`` cells per side and 2n^2 triangles.

    Every square cell is split along its lower-left to upper-right diagonal.
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"cells per side must be >= 1, got {n!r}")
    n = int(n)
    s = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(s, s)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    k = np.arange(n)
    bottom = np.column_stack([k, k + 1])
    right = np.column_stack([k * (n + 1) + n, (k + 1) * (n + 1) + n])
    top = np.column_stack([n * (n + 1) + k + 1, n * (n + 1) + k])
    left = np.column_stack([(k + 1) * (n + 1), k * (n + 1)])
    edges = np.concatenate([left, right, bottom, top])
    tags = np.repeat([LEFT, RIGHT, BOTTOM, TOP], n)

    return _finish(vertices, triangles, edges, tags)


def from_arrays(vertices, triangles):
    """Mesh of the unit square from raw arrays; boundary sides inferred."""
    vertices = np.array(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    nb = _element_neighbors(triangles)
    local = np.array([[1, 2], [2, 0], [0, 1]])
    t_idx, l_idx = np.nonzero(nb < 0)
    edges = triangles[t_idx[:, None], local[l_idx]]
    mid = vertices[edges].mean(axis=1)
    tol = 1e-12
    tags = np.full(len(edges), -1)
    tags[np.abs(mid[:, 0]) < tol] = LEFT
    tags[np.abs(mid[:, 0] - 1) < tol] = RIGHT
    tags[np.abs(mid[:, 1]) < tol] = BOTTOM
    tags[np.abs(mid[:, 1] - 1) < tol] = TOP
    if np.any(tags < 0):
        raise InvalidArgumentError("boundary edge not on the unit square boundary")
    return _finish(vertices, triangles, edges, tags)


def _finish(vertices, triangles, edges, tags):
    nv = len(vertices)
    count = np.zeros((nv, 4), dtype=np.int64)
    for side in range(4):
        e = edges[tags == side]
        count[np.unique(e), side] = 1
    nsides = count.sum(axis=1)
    flags = np.where(nsides >= 2, CORNER, np.where(nsides == 1, EDGE, INTERIOR))
    side = np.where(nsides == 1, count.argmax(axis=1), -1)
    return TriMesh(vertices, triangles.astype(np.int64), edges.astype(np.int64),
                   np.asarray(tags, dtype=np.int64), flags.astype(np.int64),
                   side.astype(np.int64))


def affine_map(mesh, k, reference="fem"):
    """Affine map from the ``reference`` triangle ("fem" or "mmpde") onto element ``k``."""
    try:
        ref = _REFERENCES[reference]
    except KeyError:
        raise InvalidArgumentError(f"unknown reference element {reference!r}") from None
    x = mesh.vertices[mesh.triangles[k]]
    e = np.column_stack([x[1] - x[0], x[2] - x[0]])
    if 0.5 * np.linalg.det(e) <= DEGENERATE_AREA:
        raise DegenerateElementError(f"element {k} is degenerate or inverted")
    r = np.column_stack([ref[1] - ref[0], ref[2] - ref[0]])
    jac = e @ np.linalg.inv(r)
    inv = np.linalg.inv(jac)
    origin = x[0] - jac @ ref[0]
    return AffineMap(jac, inv, float(np.linalg.det(jac)), origin)


def diam(mesh, k):
    """Longest edge of element ``k``."""
    x = mesh.vertices[mesh.triangles[k]]
    return float(max(np.linalg.norm(x[1] - x[0]), np.linalg.norm(x[2] - x[1]),
                     np.linalg.norm(x[0] - x[2])))


def classify_boundary(mesh, b, t=0.0):
    """Tag each boundary edge INFLOW (b.n < 0 at the midpoint) or OUTFLOW."""
    a, c = mesh.boundary_edges.T
    mid = 0.5 * (mesh.vertices[a] + mesh.vertices[c])
    bx, by = b(mid[:, 0], mid[:, 1], t)
    nrm = mesh.boundary_normals()
    bn = np.broadcast_to(bx, len(mid)) * nrm[:, 0] + np.broadcast_to(by, len(mid)) * nrm[:, 1]
    return np.where(bn < 0, INFLOW, OUTFLOW)
