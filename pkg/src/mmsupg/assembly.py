"""Linear finite element assembly with optional SUPG stabilization.

Element integrals use the edge-midpoint rule, exact for polynomials of
degree two, which covers every product of linear basis data with a linear
flow field.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from .errors import DegenerateElementError
from .problems import INFLOW_DIRICHLET
from .sparse import SparseMatrix

# barycentric coordinates of the three edge midpoints, one row per point
MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
MIDPOINT_WEIGHT = 1.0 / 3.0  # times |K|


def peclet(diam, b_inf, eps):
    """Element Peclet number ``b_inf * diam / (2 eps)``; inf when eps = 0 < b_inf."""
    diam, b_inf, eps = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (diam, b_inf, eps)))
    with np.errstate(divide="ignore", invalid="ignore"):
        pe = b_inf * diam / (2.0 * eps)
    pe = np.where(b_inf == 0.0, 0.0, np.where(eps == 0.0, np.inf, pe))
    return pe[()] if pe.ndim == 0 else pe


def tau(diam, b_inf, eps):
    """SUPG parameter ``diam / b_inf * min(1, Pe/3)``; zero where b_inf = 0."""
    pe = peclet(diam, b_inf, eps)
    diam, b_inf = np.broadcast_arrays(np.asarray(diam, dtype=float), np.asarray(b_inf, dtype=float))
    xi = np.minimum(1.0, pe / 3.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(b_inf > 0.0, diam / b_inf * xi, 0.0)
    return t[()] if t.ndim == 0 else t


@dataclass(frozen=True)
class StabilizationParams:
    enabled: bool
    tau: np.ndarray
    peclet: np.ndarray
    b_inf: np.ndarray


@dataclass(frozen=True)
class AssembledSystem:
    mass: SparseMatrix
    operator: SparseMatrix
    load: np.ndarray
    dirichlet_nodes: np.ndarray
    dirichlet_values: np.ndarray
    stabilization: StabilizationParams
    t: float


def basis_gradients(mesh):
    """Constant gradients of the three hat functions per element, shape (N, 3, 2),
    and the element areas."""
    e = mesh.edge_matrices()
    det = e[:, 0, 0] * e[:, 1, 1] - e[:, 0, 1] * e[:, 1, 0]
    if np.any(0.5 * det <= meshmod.DEGENERATE_AREA):
        k = int(np.argmin(det))
        raise DegenerateElementError(f"element {k} is degenerate or inverted")
    inv = np.empty_like(e)
    inv[:, 0, 0] = e[:, 1, 1] / det
    inv[:, 0, 1] = -e[:, 0, 1] / det
    inv[:, 1, 0] = -e[:, 1, 0] / det
    inv[:, 1, 1] = e[:, 0, 0] / det
    g = np.empty((len(e), 3, 2))
    g[:, 1] = inv[:, 0]
    g[:, 2] = inv[:, 1]
    g[:, 0] = -g[:, 1] - g[:, 2]
    return g, 0.5 * det


def _pattern(mesh):
    """CSR structure of the P1 stiffness pattern and the scatter map from
    element-local (i, j) entries into it. Cached per connectivity."""
    topo = mesh._topology
    if "pattern" not in topo:
        tri = mesh.triangles
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        nv = mesh.n_vertices
        key = rows * nv + cols
        uniq, pos = np.unique(key, return_inverse=True)
        urows, ucols = uniq // nv, uniq % nv
        indptr = np.searchsorted(urows, np.arange(nv + 1))
        diag = np.searchsorted(uniq, np.arange(nv) * (nv + 1))
        topo["pattern"] = (indptr, ucols, pos.ravel(), diag)
    return topo["pattern"]


def scatter_matrix(mesh, local):
    """Sum element matrices ``local[k, i, j]`` (row i = test function) into CSR."""
    indptr, cols, pos, _ = _pattern(mesh)
    data = np.bincount(pos, weights=local.ravel(), minlength=len(cols))
    n = mesh.n_vertices
    return SparseMatrix(n, n, indptr, cols, data)


def scatter_vector(mesh, local):
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def quadrature_points(mesh):
    """Edge-midpoint quadrature points, shape (N, 3, 2)."""
    return np.einsum("qi,kid->kqd", MIDPOINT_BARY, mesh.corners())


def stabilization(mesh, problem, t, enabled=True, qpts=None):
    if qpts is None:
        qpts = quadrature_points(mesh)
    bx, by = problem.b(qpts[..., 0], qpts[..., 1], t)
    b_inf = np.sqrt(bx * bx + by * by).max(axis=1)
    d = mesh.diameters()
    pe = peclet(d, b_inf, problem.eps)
    tk = tau(d, b_inf, problem.eps) if enabled else np.zeros(mesh.n_elements)
    return StabilizationParams(bool(enabled), np.asarray(tk), np.asarray(pe), b_inf)


def dirichlet_data(mesh, problem, t):
    """Constrained vertex indices and their boundary values at time ``t``."""
    if problem.bc == INFLOW_DIRICHLET:
        kind = meshmod.classify_boundary(mesh, problem.b, t)
        nodes = np.unique(mesh.boundary_edges[kind == meshmod.INFLOW])
    else:
        nodes = mesh.boundary_vertices()
    x = mesh.vertices[nodes]
    values = np.asarray(problem.boundary_value(x[:, 0], x[:, 1], t), dtype=float)
    return nodes.astype(np.int64), np.broadcast_to(values, nodes.shape).copy()


def assemble(mesh, problem, t, supg):
    """Mass matrix, convection-diffusion operator and load at time ``t``."""
    grads, area = basis_gradients(mesh)
    qpts = quadrature_points(mesh)
    qx, qy = qpts[..., 0], qpts[..., 1]
    w = area * MIDPOINT_WEIGHT                           # (N,)
    phi = MIDPOINT_BARY                                  # (q, i)

    bx, by = problem.b(qx, qy, t)
    bx = np.broadcast_to(bx, qx.shape)
    by = np.broadcast_to(by, qx.shape)
    stab = stabilization(mesh, problem, t, supg, qpts)
    tk = stab.tau
    eps = problem.eps
    # b . grad(phi_i) at each quadrature point, (N, q, i)
    bg = bx[:, :, None] * grads[:, None, :, 0] + by[:, :, None] * grads[:, None, :, 1]
    fq = np.broadcast_to(problem.f(qx, qy, t), qx.shape)

    mass_ref = np.einsum("qi,qj->ij", phi, phi)          # sum over points of phi_i phi_j
    mass = w[:, None, None] * mass_ref
    conv = w[:, None, None] * np.einsum("qi,kqj->kij", phi, bg)
    gg = np.einsum("kid,kjd->kij", grads, grads)
    oper = conv + (eps * area)[:, None, None] * gg
    load = w[:, None] * np.einsum("kq,qi->ki", fq, phi)

    if supg:
        tw = tk * w
        mass = mass + tw[:, None, None] * np.einsum("kqi,qj->kij", bg, phi)
        oper = oper + tw[:, None, None] * np.einsum("kqi,kqj->kij", bg, bg)
        load = load + tw[:, None] * np.einsum("kq,kqi->ki", fq, bg)
        if eps > 0.0 and problem.grad_b is not None:
            (b11, b12), (b21, b22) = problem.grad_b(qx, qy, t)
            b11, b12, b21, b22 = (np.broadcast_to(v, qx.shape) for v in (b11, b12, b21, b22))
            # grad(b . grad phi_i) = Jb^T grad phi_i, per quadrature point
            gi_x = b11[:, :, None] * grads[:, None, :, 0] + b21[:, :, None] * grads[:, None, :, 1]
            gi_y = b12[:, :, None] * grads[:, None, :, 0] + b22[:, :, None] * grads[:, None, :, 1]
            cross = (np.einsum("kqi,kj->kij", gi_x, grads[:, :, 0])
                     + np.einsum("kqi,kj->kij", gi_y, grads[:, :, 1]))
            oper = oper + (eps * tw)[:, None, None] * cross

    nodes, values = dirichlet_data(mesh, problem, t)
    return AssembledSystem(
        mass=scatter_matrix(mesh, mass), operator=scatter_matrix(mesh, oper),
        load=scatter_vector(mesh, load), dirichlet_nodes=nodes,
        dirichlet_values=values, stabilization=stab, t=float(t),
    )


def apply_dirichlet(sys, combined, rhs):
    """Replace constrained rows by identity rows and set their right-hand side.

    Returns a new matrix and vector; inputs are left untouched.
    """
    nodes = np.asarray(sys.dirichlet_nodes, dtype=np.int64)
    rhs = np.array(rhs, dtype=float)
    rhs[nodes] = sys.dirichlet_values
    mask = np.zeros(combined.n_rows, dtype=bool)
    mask[nodes] = True
    rows = combined.row_of()
    data = combined.data.copy()
    data[mask[rows]] = 0.0
    is_diag = mask[rows] & (combined.indices == rows)
    if is_diag.sum() == len(nodes):
        data[is_diag] = 1.0
        return combined.with_data(data), rhs
    import scipy.sparse as sp
    from .sparse import _from_scipy
    m = sp.csr_matrix((data, combined.indices, combined.indptr), shape=combined.shape)
    m = m + sp.diags(mask.astype(float))
    return _from_scipy(m), rhs
