"""NumPy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop by loop
and ``kernels.py`` picks one at import time.
"""
import numpy as np


def mesh_energy(vertices, triangles, trace_metric, sqrt_det, ref_edges, alpha, p, want_grad):
    """Mesh energy sum_K |K| G_K and optionally its vertex gradient.

    ``trace_metric`` holds (m11, m12, m22) per element for the matrix inside
    the trace term, ``sqrt_det`` is sqrt(det M_K) and ``ref_edges`` is the
    2x2 edge matrix of the reference triangle. Returns
    ``(energy, min_area, grad)``; ``grad`` is None unless requested.
    When ``min_area <= 0`` the energy is meaningless and the caller must
    reject the mesh.
    """
    x0 = vertices[triangles[:, 0]]
    d1 = vertices[triangles[:, 1]] - x0
    d2 = vertices[triangles[:, 2]] - x0
    det_e = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det_e
    min_area = float(area.min()) if len(area) else 0.0
    if min_area <= 0.0:
        return np.inf, min_area, None

    # E^{-1} rows
    ie00 = d2[:, 1] / det_e
    ie01 = -d2[:, 0] / det_e
    ie10 = -d1[:, 1] / det_e
    ie11 = d1[:, 0] / det_e
    # J = Eref E^{-1}
    e00, e01 = float(ref_edges[0, 0]), float(ref_edges[0, 1])
    e10, e11 = float(ref_edges[1, 0]), float(ref_edges[1, 1])
    ref_det = e00 * e11 - e01 * e10
    j00 = e00 * ie00 + e01 * ie10
    j01 = e00 * ie01 + e01 * ie11
    j10 = e10 * ie00 + e11 * ie10
    j11 = e10 * ie01 + e11 * ie11
    det_j = ref_det / det_e

    m11, m12, m22 = trace_metric[:, 0], trace_metric[:, 1], trace_metric[:, 2]
    sdm = sqrt_det
    # (J M)
    jm00 = j00 * m11 + j01 * m12
    jm01 = j00 * m12 + j01 * m22
    jm10 = j10 * m11 + j11 * m12
    jm11 = j10 * m12 + j11 * m22
    tr = jm00 * j00 + jm01 * j01 + jm10 * j10 + jm11 * j11
    c2 = (1.0 - 2.0 * alpha) * 2.0 ** p
    ratio = det_j / sdm
    g = alpha * sdm * tr ** p + c2 * sdm * ratio ** p
    energy = float((area * g).sum())
    if not want_grad:
        return energy, min_area, None

    g_t = alpha * sdm * p * tr ** (p - 1.0)
    g_d = c2 * p * ratio ** (p - 1.0)
    # gradient w.r.t. E: area * [(G - g_d det_j) E^{-T} - 2 g_T J^T J M E^{-T}]
    s = g - g_d * det_j
    # J^T (J M)
    a00 = j00 * jm00 + j10 * jm10
    a01 = j00 * jm01 + j10 * jm11
    a10 = j01 * jm00 + j11 * jm10
    a11 = j01 * jm01 + j11 * jm11
    # E^{-T} entries: (E^{-T})_{ab} = ie_{ba}
    b00 = s * ie00 - 2.0 * g_t * (a00 * ie00 + a01 * ie01)
    b01 = s * ie10 - 2.0 * g_t * (a00 * ie10 + a01 * ie11)
    b10 = s * ie01 - 2.0 * g_t * (a10 * ie00 + a11 * ie01)
    b11 = s * ie11 - 2.0 * g_t * (a10 * ie10 + a11 * ie11)
    gx1, gy1 = area * b00, area * b10
    gx2, gy2 = area * b01, area * b11
    nv = len(vertices)
    grad = np.empty((nv, 2))
    t0, t1, t2 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    grad[:, 0] = (np.bincount(t1, gx1, nv) + np.bincount(t2, gx2, nv)
                  - np.bincount(t0, gx1 + gx2, nv))
    grad[:, 1] = (np.bincount(t1, gy1, nv) + np.bincount(t2, gy2, nv)
                  - np.bincount(t0, gy1 + gy2, nv))
    return energy, min_area, grad


def barycentric(points, vertices, triangles, elems):
    p = vertices[triangles[elems]]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    r = points - p[:, 0]
    l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    return np.column_stack([1.0 - l1 - l2, l1, l2])


def locate(points, vertices, triangles, neighbors, seeds, max_steps=1000, tol=1e-12):
    """Walk from ``seeds`` toward each point.

    Returns ``(elems, bary, found)``; points that leave the mesh through a
    boundary edge or exceed ``max_steps`` have ``found = False`` and keep
    the last element visited.
    """
    elems = np.array(seeds, dtype=np.int64)
    n = len(points)
    bary = np.empty((n, 3))
    found = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for _ in range(max_steps):
        if len(active) == 0:
            break
        lam = barycentric(points[active], vertices, triangles, elems[active])
        bary[active] = lam
        worst = lam.argmin(axis=1)
        inside = lam[np.arange(len(active)), worst] >= -tol
        found[active[inside]] = True
        active, worst = active[~inside], worst[~inside]
        nxt = neighbors[elems[active], worst]
        stuck = nxt < 0
        elems[active[~stuck]] = nxt[~stuck]
        active = active[~stuck]
    return elems, bary, found
