# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled curvature and contraction kernels.

Same contracts and index conventions as gbc.kernels_numpy; see that module
for the formulas.  Loops run without the GIL so chunked evaluation scales
across threads.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def curvature_fields(const double[:, :, ::1] g, const double[:, :, :, ::1] dg,
                     const double[:, :, :, :, ::1] ddg, const double[:, :, ::1] g_inv):
    cdef Py_ssize_t npts = g.shape[0]
    cdef Py_ssize_t n = g.shape[1]
    gamma_arr = np.empty((npts, n, n, n))
    riem_low_arr = np.empty((npts, n, n, n, n))
    riem_mixed_arr = np.empty((npts, n, n, n, n))
    ricci_arr = np.empty((npts, n, n))
    scalar_arr = np.empty(npts)
    cdef double[:, :, :, ::1] gamma = gamma_arr
    cdef double[:, :, :, :, ::1] riem_low = riem_low_arr
    cdef double[:, :, :, :, ::1] riem_mixed = riem_mixed_arr
    cdef double[:, :, ::1] ricci = ricci_arr
    cdef double[::1] scalar = scalar_arr

    # per-call scratch buffers, reused across points
    gl_arr = np.empty((n, n, n))
    dgi_arr = np.empty((n, n, n))
    dgl_arr = np.empty((n, n, n, n))
    dgam_arr = np.empty((n, n, n, n))
    ru_arr = np.empty((n, n, n, n))
    cdef double[:, :, ::1] gl = gl_arr
    cdef double[:, :, ::1] dgi = dgi_arr
    cdef double[:, :, :, ::1] dgl = dgl_arr
    cdef double[:, :, :, ::1] dgam = dgam_arr
    cdef double[:, :, :, ::1] ru = ru_arr

    cdef Py_ssize_t p, a, b, c, d, e, f, h
    cdef double acc, s

    with nogil:
        for p in range(npts):
            # Gamma_low[d,b,c] = (d_b g_dc + d_c g_bd - d_d g_bc) / 2
            for d in range(n):
                for b in range(n):
                    for c in range(n):
                        gl[d, b, c] = 0.5 * (dg[p, d, c, b] + dg[p, b, d, c]
                                             - dg[p, b, c, d])
            # Gamma^a_bc
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        acc = 0.0
                        for d in range(n):
                            acc += g_inv[p, a, d] * gl[d, b, c]
                        gamma[p, a, b, c] = acc
            # d_c g^{ae} = -g^{af} g^{eh} d_c g_fh
            for a in range(n):
                for e in range(n):
                    for c in range(n):
                        acc = 0.0
                        for f in range(n):
                            for h in range(n):
                                acc += g_inv[p, a, f] * g_inv[p, e, h] * dg[p, f, h, c]
                        dgi[a, e, c] = -acc
            # d_e Gamma_low[d,b,c]
            for d in range(n):
                for b in range(n):
                    for c in range(n):
                        for e in range(n):
                            dgl[d, b, c, e] = 0.5 * (ddg[p, d, c, b, e]
                                                     + ddg[p, b, d, c, e]
                                                     - ddg[p, b, c, d, e])
            # d_e Gamma^a_bc
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        for e in range(n):
                            acc = 0.0
                            for d in range(n):
                                acc += (dgi[a, d, e] * gl[d, b, c]
                                        + g_inv[p, a, d] * dgl[d, b, c, e])
                            dgam[a, b, c, e] = acc
            # R^a_bcd
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        for d in range(n):
                            acc = dgam[a, d, b, c] - dgam[a, c, b, d]
                            for e in range(n):
                                acc += (gamma[p, a, c, e] * gamma[p, e, d, b]
                                        - gamma[p, a, d, e] * gamma[p, e, c, b])
                            ru[a, b, c, d] = acc
            # lowered and pair-raised forms
            for a in range(n):
                for b in range(n):
                    for c in range(n):
                        for d in range(n):
                            acc = 0.0
                            s = 0.0
                            for e in range(n):
                                acc += g[p, a, e] * ru[e, b, c, d]
                                s += g_inv[p, b, e] * ru[a, e, c, d]
                            riem_low[p, a, b, c, d] = acc
                            riem_mixed[p, a, b, c, d] = s
            # Ricci and scalar
            s = 0.0
            for b in range(n):
                for d in range(n):
                    acc = 0.0
                    for a in range(n):
                        acc += ru[a, b, a, d]
                    ricci[p, b, d] = acc
                    s += g_inv[p, b, d] * acc
            scalar[p] = s

    return gamma_arr, riem_low_arr, riem_mixed_arr, ricci_arr, scalar_arr


def raw_sum(const double[:, :, :, :, ::1] rm, const cnp.int64_t[:, ::1] b,
            const cnp.int64_t[:, ::1] c, const double[::1] sign, int k):
    cdef Py_ssize_t npts = rm.shape[0]
    cdef Py_ssize_t nterms = b.shape[0]
    out_arr = np.zeros(npts)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, t, j
    cdef double acc, w
    with nogil:
        for p in range(npts):
            acc = 0.0
            for t in range(nterms):
                w = sign[t]
                for j in range(k):
                    w *= rm[p, b[t, 2 * j], b[t, 2 * j + 1],
                            c[t, 2 * j], c[t, 2 * j + 1]]
                acc += w
            out[p] = acc
    return out_arr


def lovelock_sum(const double[:, :, :, :, ::1] rm, const double[:, :, ::1] g,
                 const cnp.int64_t[:, ::1] b, const cnp.int64_t[:, ::1] c,
                 const cnp.int64_t[::1] j, const cnp.int64_t[::1] i1,
                 const double[::1] sign, int k):
    cdef Py_ssize_t npts = rm.shape[0]
    cdef Py_ssize_t n = rm.shape[1]
    cdef Py_ssize_t nterms = b.shape[0]
    out_arr = np.zeros((npts, n, n))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t p, t, q, i2
    cdef double w
    with nogil:
        for p in range(npts):
            for t in range(nterms):
                w = sign[t]
                for q in range(k):
                    w *= rm[p, b[t, 2 * q], b[t, 2 * q + 1],
                            c[t, 2 * q], c[t, 2 * q + 1]]
                for i2 in range(n):
                    out[p, i1[t], i2] += w * g[p, j[t], i2]
    return out_arr
