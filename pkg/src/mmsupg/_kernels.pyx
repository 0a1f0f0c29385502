# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``.

Signatures and return values match the NumPy versions exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, INFINITY

cnp.import_array()


def mesh_energy(const double[:, ::1] vertices, const cnp.int64_t[:, ::1] triangles,
                const double[:, ::1] trace_metric, const double[::1] sqrt_det,
                ref_edges, double alpha, double p, bint want_grad):
    cdef Py_ssize_t n = triangles.shape[0], nv = vertices.shape[0], k
    cdef double e00 = ref_edges[0, 0], e01 = ref_edges[0, 1]
    cdef double e10 = ref_edges[1, 0], e11 = ref_edges[1, 1]
    cdef double ref_det = e00 * e11 - e01 * e10
    cdef double c2 = (1.0 - 2.0 * alpha) * pow(2.0, p)
    cdef double energy = 0.0, min_area = INFINITY
    cdef Py_ssize_t i0, i1, i2
    cdef double d1x, d1y, d2x, d2y, det_e, area
    cdef double ie00, ie01, ie10, ie11, j00, j01, j10, j11, det_j
    cdef double m11, m12, m22, sdm, jm00, jm01, jm10, jm11, tr, ratio, g
    cdef double g_t, g_d, s, a00, a01, a10, a11, b00, b01, b10, b11
    cdef bint half = p == 1.5

    for k in range(n):
        i0 = triangles[k, 0]
        i1 = triangles[k, 1]
        i2 = triangles[k, 2]
        d1x = vertices[i1, 0] - vertices[i0, 0]
        d1y = vertices[i1, 1] - vertices[i0, 1]
        d2x = vertices[i2, 0] - vertices[i0, 0]
        d2y = vertices[i2, 1] - vertices[i0, 1]
        det_e = d1x * d2y - d1y * d2x
        if 0.5 * det_e < min_area:
            min_area = 0.5 * det_e
    if n == 0:
        min_area = 0.0
    if min_area <= 0.0:
        return np.inf, min_area, None

    grad_arr = np.zeros((nv, 2)) if want_grad else np.zeros((0, 2))
    cdef double[:, ::1] grad = grad_arr

    for k in range(n):
        i0 = triangles[k, 0]
        i1 = triangles[k, 1]
        i2 = triangles[k, 2]
        d1x = vertices[i1, 0] - vertices[i0, 0]
        d1y = vertices[i1, 1] - vertices[i0, 1]
        d2x = vertices[i2, 0] - vertices[i0, 0]
        d2y = vertices[i2, 1] - vertices[i0, 1]
        det_e = d1x * d2y - d1y * d2x
        area = 0.5 * det_e
        ie00 = d2y / det_e
        ie01 = -d2x / det_e
        ie10 = -d1y / det_e
        ie11 = d1x / det_e
        j00 = e00 * ie00 + e01 * ie10
        j01 = e00 * ie01 + e01 * ie11
        j10 = e10 * ie00 + e11 * ie10
        j11 = e10 * ie01 + e11 * ie11
        det_j = ref_det / det_e

        m11 = trace_metric[k, 0]
        m12 = trace_metric[k, 1]
        m22 = trace_metric[k, 2]
        sdm = sqrt_det[k]
        jm00 = j00 * m11 + j01 * m12
        jm01 = j00 * m12 + j01 * m22
        jm10 = j10 * m11 + j11 * m12
        jm11 = j10 * m12 + j11 * m22
        tr = jm00 * j00 + jm01 * j01 + jm10 * j10 + jm11 * j11
        ratio = det_j / sdm
        g = alpha * sdm * _power(tr, p, half) + c2 * sdm * _power(ratio, p, half)
        energy += area * g
        if not want_grad:
            continue

        g_t = alpha * sdm * p * _power_m1(tr, p, half)
        g_d = c2 * p * _power_m1(ratio, p, half)
        s = g - g_d * det_j
        a00 = j00 * jm00 + j10 * jm10
        a01 = j00 * jm01 + j10 * jm11
        a10 = j01 * jm00 + j11 * jm10
        a11 = j01 * jm01 + j11 * jm11
        b00 = area * (s * ie00 - 2.0 * g_t * (a00 * ie00 + a01 * ie01))
        b01 = area * (s * ie10 - 2.0 * g_t * (a00 * ie10 + a01 * ie11))
        b10 = area * (s * ie01 - 2.0 * g_t * (a10 * ie00 + a11 * ie01))
        b11 = area * (s * ie11 - 2.0 * g_t * (a10 * ie10 + a11 * ie11))
        grad[i1, 0] += b00
        grad[i1, 1] += b10
        grad[i2, 0] += b01
        grad[i2, 1] += b11
        grad[i0, 0] -= b00 + b01
        grad[i0, 1] -= b10 + b11

    return energy, min_area, (grad_arr if want_grad else None)


cdef inline double _power(double x, double p, bint half) nogil:
    # p = 1.5 is the usual exponent; x*sqrt(x) is much cheaper than pow
    if half:
        return x * sqrt(x)
    return pow(x, p)


cdef inline double _power_m1(double x, double p, bint half) nogil:
    if half:
        return sqrt(x)
    return pow(x, p - 1.0)


cdef inline void _bary(const double[:, ::1] vertices, const cnp.int64_t[:, ::1] triangles,
                       Py_ssize_t k, double px, double py, double* lam) nogil:
    cdef Py_ssize_t i0 = triangles[k, 0], i1 = triangles[k, 1], i2 = triangles[k, 2]
    cdef double d1x = vertices[i1, 0] - vertices[i0, 0]
    cdef double d1y = vertices[i1, 1] - vertices[i0, 1]
    cdef double d2x = vertices[i2, 0] - vertices[i0, 0]
    cdef double d2y = vertices[i2, 1] - vertices[i0, 1]
    cdef double det = d1x * d2y - d1y * d2x
    cdef double rx = px - vertices[i0, 0], ry = py - vertices[i0, 1]
    lam[1] = (rx * d2y - ry * d2x) / det
    lam[2] = (d1x * ry - d1y * rx) / det
    lam[0] = 1.0 - lam[1] - lam[2]


def locate(const double[:, ::1] points, const double[:, ::1] vertices,
           const cnp.int64_t[:, ::1] triangles, const cnp.int64_t[:, ::1] neighbors,
           seeds, Py_ssize_t max_steps=1000, double tol=1e-12):
    cdef Py_ssize_t n = points.shape[0], i, step, k, worst, nxt
    elems_arr = np.array(seeds, dtype=np.int64)
    bary_arr = np.empty((n, 3))
    found_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] elems = elems_arr
    cdef double[:, ::1] bary = bary_arr
    cdef cnp.uint8_t[::1] found = found_arr
    cdef double lam[3]
    with nogil:
        for i in range(n):
            k = elems[i]
            for step in range(max_steps):
                _bary(vertices, triangles, k, points[i, 0], points[i, 1], lam)
                worst = 0
                if lam[1] < lam[worst]:
                    worst = 1
                if lam[2] < lam[worst]:
                    worst = 2
                bary[i, 0] = lam[0]
                bary[i, 1] = lam[1]
                bary[i, 2] = lam[2]
                if lam[worst] >= -tol:
                    found[i] = 1
                    break
                nxt = neighbors[k, worst]
                if nxt < 0:
                    break
                k = nxt
            elems[i] = k
    return elems_arr, bary_arr, found_arr.astype(bool)
