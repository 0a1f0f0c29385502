"""Hessian-based metric tensors and variational mesh movement.

The mesh energy is

    I = sum_K |K| [ alpha sqrt(det M_K) tr(J_K M_K J_K^T)^p
                    + (1 - 2 alpha) 2^p sqrt(det M_K) (det J_K / sqrt(det M_K))^p ]

with J_K the inverse Jacobian of the affine map from a unit-area equilateral
reference triangle. Vertices follow the preconditioned gradient flow
dx_i/dt = -(P_i / gamma) dI/dx_i, P_i = det(M(x_i))^((p - 1) / 2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import AdaptationFailure, InterpolationFailure, InvalidArgumentError, InvalidMeshError
from .mesh import BOTTOM, CORNER, EDGE, LEFT, MMPDE_REFERENCE, RIGHT, TOP

log = logging.getLogger(__name__)

REF_EDGES = np.column_stack([MMPDE_REFERENCE[1] - MMPDE_REFERENCE[0],
                             MMPDE_REFERENCE[2] - MMPDE_REFERENCE[0]])

MAX_HALVINGS = 20
CLAMP_DISTANCE = 1e-9


@dataclass
class MmpdeConfig:
    alpha: float = 1.0 / 3.0
    p: float = 1.5
    gamma: float = 0.1
    sub_steps: int = 2
    d_tau: Optional[float] = None
    move_fraction: float = 0.2
    inverse_trace: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.5:
            raise InvalidArgumentError("alpha must lie in (0, 1/2]")
        if self.p <= 1.0:
            raise InvalidArgumentError("p must exceed 1")
        if self.gamma <= 0.0:
            raise InvalidArgumentError("gamma must be positive")
        if self.sub_steps < 0:
            raise InvalidArgumentError("sub_steps must be non-negative")
        if self.d_tau is not None and self.d_tau <= 0.0:
            raise InvalidArgumentError("d_tau must be positive")
        if not 0.0 < self.move_fraction < 1.0:
            raise InvalidArgumentError("move_fraction must lie in (0, 1)")


@dataclass
class MetricField:
    """Vertex metric tensors and their element averages, both (n, 2, 2)."""

    vertex_tensors: np.ndarray
    element_tensors: np.ndarray
    sigma: float


@dataclass
class StepStats:
    """Diagnostics collected by :func:`mmpde_step`."""

    energy_before: float = 0.0
    energy_after: float = 0.0
    halvings: int = 0
    accepted: int = 0
    d_tau: float = 0.0
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Hessian recovery

def _patches(mesh):
    """Vertex patches for the quadratic fit, grouped by size.

    Returns a list of ``(vertex_ids, patch_matrix)`` where row r of
    ``patch_matrix`` lists the patch of ``vertex_ids[r]`` (the vertex first).
    """
    topo = mesh._topology
    if "patches" in topo:
        return topo["patches"]
    offsets, nbrs = mesh.vertex_neighbors()
    groups = {}
    for v in range(mesh.n_vertices):
        ring = nbrs[offsets[v]:offsets[v + 1]]
        patch = [v] + list(ring)
        if len(patch) < 6:
            second = set(ring.tolist())
            for w in ring:
                second.update(nbrs[offsets[w]:offsets[w + 1]].tolist())
            second.discard(v)
            patch = [v] + sorted(second)
        groups.setdefault(len(patch), []).append(patch)
    out = []
    for size in sorted(groups):
        mat = np.array(groups[size], dtype=np.int64)
        out.append((mat[:, 0].copy(), mat))
    topo["patches"] = out
    return out


def recover_hessian(mesh, u, stats=None):
    """Least-squares quadratic fit over vertex patches; returns (n_vertices, 2, 2).

    Vertices whose patch is rank deficient get a zero Hessian; the number of
    such vertices is logged and added to ``stats["rank_deficient"]`` when a
    dict is given.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise InvalidArgumentError("nodal vector length does not match the mesh")
    hess = np.zeros((mesh.n_vertices, 2, 2))
    bad = 0
    for vids, patch in _patches(mesh):
        size = patch.shape[1]
        pts = mesh.vertices[patch]                       # (B, m, 2)
        d = pts - pts[:, :1, :]
        scale = np.abs(d).max(axis=(1, 2))
        scale[scale == 0] = 1.0
        d = d / scale[:, None, None]
        dx, dy = d[..., 0], d[..., 1]
        a = np.stack([np.ones_like(dx), dx, dy, dx * dx, dx * dy, dy * dy], axis=2)
        uv, s, vt = np.linalg.svd(a, full_matrices=False)
        # fewer than six points cannot determine a quadratic
        ok = (size >= 6) & (s[:, -1] > 1e-10 * s[:, 0])
        rhs = np.einsum("bmk,bm->bk", uv, u[patch])
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.einsum("bkj,bk->bj", vt, np.where(ok[:, None], rhs / s, 0.0))
        inv2 = 1.0 / (scale * scale)
        h = np.zeros((len(vids), 2, 2))
        h[:, 0, 0] = 2.0 * coef[:, 3] * inv2
        h[:, 0, 1] = h[:, 1, 0] = coef[:, 4] * inv2
        h[:, 1, 1] = 2.0 * coef[:, 5] * inv2
        h[~ok] = 0.0
        bad += int((~ok).sum())
        hess[vids] = h
    if bad:
        log.warning("Hessian recovery: %d rank-deficient patches set to zero", bad)
    if stats is not None:
        stats["rank_deficient"] = stats.get("rank_deficient", 0) + bad
    return hess


# ---------------------------------------------------------------------------
# metric tensors

def metric_tensor(h):
    """det(I + |H|)^(-1/6) (I + |H|) for one or many symmetric 2x2 matrices."""
    h = np.asarray(h, dtype=float)
    shape = h.shape
    h = h.reshape(-1, 2, 2)
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    lam, vec = np.linalg.eigh(h)
    lam = 1.0 + np.abs(lam)
    scale = (lam[:, 0] * lam[:, 1]) ** (-1.0 / 6.0)
    m = np.einsum("kij,kj,klj->kil", vec, lam * scale[:, None], vec)
    m = 0.5 * (m + np.swapaxes(m, 1, 2))
    return m.reshape(shape)


def element_metric(mesh, vertex_tensors):
    """Arithmetic mean of the three vertex tensors per element and sigma_h."""
    vt = np.asarray(vertex_tensors, dtype=float)
    mk = vt[mesh.triangles].mean(axis=1)
    det = mk[:, 0, 0] * mk[:, 1, 1] - mk[:, 0, 1] * mk[:, 1, 0]
    sigma = float((mesh.areas() * np.sqrt(det)).sum())
    return mk, sigma


def build_metric(mesh, u, stats=None):
    """Hessian recovery followed by metric construction and averaging."""
    vt = metric_tensor(recover_hessian(mesh, u, stats))
    mk, sigma = element_metric(mesh, vt)
    return MetricField(vt, mk, sigma)


def uniform_metric(mesh, scale=1.0):
    vt = np.broadcast_to(scale * np.eye(2), (mesh.n_vertices, 2, 2)).copy()
    mk, sigma = element_metric(mesh, vt)
    return MetricField(vt, mk, sigma)


def equidistribution_quality(mesh, metric):
    """max_K |K| sqrt(det M_K) / (sigma_h / N); equals 1 for an equidistributed mesh."""
    mk = metric.element_tensors
    det = mk[:, 0, 0] * mk[:, 1, 1] - mk[:, 0, 1] ** 2
    vol = mesh.areas() * np.sqrt(det)
    return float(vol.max() / (vol.sum() / mesh.n_elements))


# ---------------------------------------------------------------------------
# energy

def _kernel_metric(element_tensors, cfg):
    """(m11, m12, m22) of the matrix inside the trace term, and sqrt(det M_K)."""
    m = np.asarray(element_tensors, dtype=float)
    a, b, c = m[:, 0, 0], 0.5 * (m[:, 0, 1] + m[:, 1, 0]), m[:, 1, 1]
    det = a * c - b * b
    if cfg.inverse_trace:
        a, b, c = c / det, -b / det, a / det
    return np.ascontiguousarray(np.column_stack([a, b, c])), np.sqrt(det)


def _energy(vertices, triangles, km, cfg, want_grad):
    return kernels.mesh_energy(vertices, triangles, km[0], km[1], REF_EDGES,
                               float(cfg.alpha), float(cfg.p), want_grad)


def energy(mesh, element_tensors, cfg):
    """Discrete mesh energy. Raises :class:`InvalidMeshError` on inverted elements.

    With ``cfg.inverse_trace`` (the default) the trace term is
    tr(J M^-1 J^T); otherwise tr(J M J^T) is used verbatim.
    """
    e, min_area, _ = _energy(np.ascontiguousarray(mesh.vertices), mesh.triangles,
                             _kernel_metric(element_tensors, cfg), cfg, False)
    if min_area <= 0.0:
        raise InvalidMeshError("inverted or collapsed element")
    return e


def raw_energy_gradient(mesh, element_tensors, cfg):
    """Unconstrained dI/dx_i for every vertex, shape (n_vertices, 2)."""
    _, min_area, g = _energy(np.ascontiguousarray(mesh.vertices), mesh.triangles,
                             _kernel_metric(element_tensors, cfg), cfg, True)
    if min_area <= 0.0:
        raise InvalidMeshError("inverted or collapsed element")
    return g


def project_boundary(mesh, vectors):
    """Zero vectors at corners and drop the normal part on edge vertices."""
    v = np.array(vectors, dtype=float)
    v[mesh.vertex_flags == CORNER] = 0.0
    edge = mesh.vertex_flags == EDGE
    side = mesh.vertex_side
    v[edge & ((side == LEFT) | (side == RIGHT)), 0] = 0.0
    v[edge & ((side == BOTTOM) | (side == TOP)), 1] = 0.0
    return v


def energy_gradient(mesh, element_tensors, cfg):
    """dI/dx_i with boundary constraints applied (corners pinned, edges sliding)."""
    return project_boundary(mesh, raw_energy_gradient(mesh, element_tensors, cfg))


def balance_factor(vertex_tensors, p):
    """P_i = det(M(x_i))^((p - 1) / 2)."""
    vt = np.asarray(vertex_tensors)
    det = vt[..., 0, 0] * vt[..., 1, 1] - vt[..., 0, 1] * vt[..., 1, 0]
    return det ** (0.5 * (p - 1.0))


def vertex_scale(mesh):
    """Smallest altitude among the elements around each vertex."""
    alt = 2.0 * mesh.areas() / mesh.diameters()
    out = np.full(mesh.n_vertices, np.inf)
    for i in range(3):
        np.minimum.at(out, mesh.triangles[:, i], alt)
    return out


def default_d_tau(mesh, velocity, cfg):
    """Pseudo-time step moving no vertex more than ``move_fraction`` of its
    smallest neighbouring altitude."""
    speed = np.sqrt((velocity * velocity).sum(axis=1))
    with np.errstate(divide="ignore"):
        limit = cfg.move_fraction * vertex_scale(mesh) / speed
    limit = limit[np.isfinite(limit)]
    return float(limit.min()) if len(limit) else 0.0


def mmpde_step(mesh, metric, cfg, stats=None):
    """Advance vertices by ``cfg.sub_steps`` explicit Euler steps of the mesh flow.

    Each step is halved until all areas stay positive and the energy does
    not increase. A step whose trial size has been halved ``MAX_HALVINGS``
    times without reducing the energy is taken as convergence and ends the
    call; exhausting the halvings on element inversion raises
    :class:`AdaptationFailure`.
    """
    if stats is None:
        stats = StepStats()
    km = _kernel_metric(metric.element_tensors, cfg)
    pfac = balance_factor(metric.vertex_tensors, cfg.p)[:, None]
    verts = np.array(mesh.vertices, dtype=float)
    tri = mesh.triangles
    e_cur, min_area, grad = _energy(verts, tri, km, cfg, True)
    if min_area <= 0.0:
        raise InvalidMeshError("inverted or collapsed element")
    stats.energy_before = e_cur
    current = mesh
    for _ in range(cfg.sub_steps):
        vel = -(pfac / cfg.gamma) * project_boundary(mesh, grad)
        if not np.any(vel):
            break
        dt = cfg.d_tau if cfg.d_tau is not None else default_d_tau(current, vel, cfg)
        stats.d_tau = dt
        inverted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = verts + dt * vel
            e_new, min_area, g_new = _energy(trial, tri, km, cfg, True)
            inverted = min_area <= 0.0
            if not inverted and e_new <= e_cur:
                break
            dt *= 0.5
            stats.halvings += 1
        else:
            if inverted:
                raise AdaptationFailure("mesh movement inverted elements after "
                                        f"{MAX_HALVINGS} halvings")
            break
        verts, e_cur, grad = trial, e_new, g_new
        current = mesh.with_vertices(verts)
        stats.accepted += 1
        stats.history.append(dt)
    stats.energy_after = e_cur
    return current


# ---------------------------------------------------------------------------
# mesh-to-mesh transfer

def locate_points(mesh, points, seeds=None):
    """Containing element and barycentric coordinates for each point.

    Points within ``CLAMP_DISTANCE`` outside the mesh are clamped onto the
    nearest element; anything farther raises :class:`InterpolationFailure`.
    """
    points = np.ascontiguousarray(points, dtype=float)
    verts = np.ascontiguousarray(mesh.vertices)
    if seeds is None:
        seeds = np.zeros(len(points), dtype=np.int64)
    elems, bary, found = kernels.locate(points, verts, mesh.triangles,
                                        mesh.element_neighbors(), np.asarray(seeds, np.int64))
    miss = np.flatnonzero(~found)
    if len(miss):
        e, lam = _brute_force(mesh, points[miss])
        elems[miss], bary[miss] = e, lam
    return elems, bary


def _brute_force(mesh, points):
    corners = mesh.corners()
    d1 = corners[:, 1] - corners[:, 0]
    d2 = corners[:, 2] - corners[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    out_e = np.empty(len(points), dtype=np.int64)
    out_l = np.empty((len(points), 3))
    for n, pt in enumerate(points):
        r = pt - corners[:, 0]
        l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
        l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
        lam = np.column_stack([1 - l1 - l2, l1, l2])
        clipped = np.clip(lam, 0.0, None)
        clipped /= clipped.sum(axis=1, keepdims=True)
        proj = np.einsum("ki,kid->kd", clipped, corners)
        dist = np.linalg.norm(proj - pt, axis=1)
        k = int(np.argmin(dist))
        if dist[k] > CLAMP_DISTANCE:
            raise InterpolationFailure(f"point {pt.tolist()} lies outside the mesh "
                                       f"(distance {dist[k]:.3e})")
        out_e[n] = k
        out_l[n] = clipped[k] if lam[k].min() < 0 else lam[k]
    return out_e, out_l


def interpolate(old_mesh, u_old, new_mesh):
    """Evaluate the piecewise linear ``u_old`` at the vertices of ``new_mesh``."""
    u_old = np.asarray(u_old, dtype=float)
    if u_old.shape != (old_mesh.n_vertices,):
        raise InvalidArgumentError("nodal vector length does not match the mesh")
    if new_mesh.n_vertices == old_mesh.n_vertices and new_mesh.triangles is old_mesh.triangles:
        seeds = old_mesh.vertex_elements()
        if np.array_equal(new_mesh.vertices, old_mesh.vertices):
            return u_old.copy()
    else:
        seeds = None
    elems, bary = locate_points(old_mesh, new_mesh.vertices, seeds)
    return (bary * u_old[old_mesh.triangles[elems]]).sum(axis=1)
