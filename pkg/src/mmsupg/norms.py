"""H1-seminorm and L2 measures of piecewise linear fields."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import basis_gradients

# 6-point rule exact for degree 4 (barycentric points, weights summing to 1)
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
QUAD6_BARY = np.array([
    [_A1, _A1, _B1], [_A1, _B1, _A1], [_B1, _A1, _A1],
    [_A2, _A2, _B2], [_A2, _B2, _A2], [_B2, _A2, _A2],
])
QUAD6_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)


@dataclass(frozen=True)
class NormReport:
    h1_semi: float
    l2: float
    against_exact: bool
    t: float
    n_elements: int


def element_gradients(mesh, u):
    """Constant gradient of the piecewise linear field per element, (N, 2)."""
    grads, area = basis_gradients(mesh)
    u = np.asarray(u, dtype=float)
    return np.einsum("kid,ki->kd", grads, u[mesh.triangles]), area


def _quad_points(mesh):
    return np.einsum("qi,kid->kqd", QUAD6_BARY, mesh.corners())


def h1_seminorm(mesh, u):
    g, area = element_gradients(mesh, u)
    return float(np.sqrt((area * (g * g).sum(axis=1)).sum()))


def h1_seminorm_error(mesh, u, exact_grad, t):
    """sqrt(sum_K int_K |grad u_h - grad u(., t)|^2) by 6-point quadrature."""
    g, area = element_gradients(mesh, u)
    q = _quad_points(mesh)
    ex, ey = exact_grad(q[..., 0], q[..., 1], t)
    dx = g[:, None, 0] - np.broadcast_to(ex, q.shape[:2])
    dy = g[:, None, 1] - np.broadcast_to(ey, q.shape[:2])
    per = ((dx * dx + dy * dy) * QUAD6_WEIGHTS).sum(axis=1)
    return float(np.sqrt((area * per).sum()))


def l2_error(mesh, u, exact, t):
    _, area = basis_gradients(mesh)
    u = np.asarray(u, dtype=float)
    uq = u[mesh.triangles] @ QUAD6_BARY.T                # (N, q)
    q = _quad_points(mesh)
    d = uq - np.broadcast_to(exact(q[..., 0], q[..., 1], t), uq.shape)
    return float(np.sqrt((area * ((d * d) * QUAD6_WEIGHTS).sum(axis=1)).sum()))


def report(mesh, u, problem, t):
    """Errors against the exact solution when there is one, plain norms otherwise."""
    if problem.exact_grad is not None:
        return NormReport(h1_seminorm_error(mesh, u, problem.exact_grad, t),
                          l2_error(mesh, u, problem.exact, t), True, float(t), mesh.n_elements)
    zero = lambda x, y, t: np.zeros(np.shape(x))  # noqa: E731
    return NormReport(h1_seminorm(mesh, u), l2_error(mesh, u, zero, t), False,
                      float(t), mesh.n_elements)
