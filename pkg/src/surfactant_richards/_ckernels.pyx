# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, exp, log, log1p, sqrt

cnp.import_array()

cdef double[3][3] PHI = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]


def vg_fields(psi_in, c_in, double theta_r, double theta_s, double n,
              double alpha, double K_s, double a, double b, double log_base,
              double c_cap=INFINITY):
    cdef double[::1] psi = np.ascontiguousarray(psi_in, dtype=np.float64).ravel()
    cdef double[::1] c = np.ascontiguousarray(c_in, dtype=np.float64).ravel()
    cdef Py_ssize_t k, N = psi.shape[0]
    cdef double m = (n - 1.0) / n, inv_m = n / (n - 1.0)
    cdef double lnb = log(log_base), span = theta_s - theta_r
    cdef double den, s, ds, x, S, dS, th, inner, sq, bracket, ce, lx, xn, lbase, lth, im
    theta_a = np.empty(N)
    thpsi_a = np.empty(N)
    thc_a = np.empty(N)
    K_a = np.empty(N)
    dK_a = np.empty(N)
    sat_a = np.empty(N, dtype=np.bool_)
    cdef double[::1] theta = theta_a, thpsi = thpsi_a, thc = thc_a, K = K_a, dK = dK_a
    cdef cnp.npy_bool[::1] sat = sat_a
    for k in range(N):
        if c[k] < 0.0:
            return None, 1
        ce = c[k] if c[k] <= c_cap else c_cap
        den = 1.0 - b * log1p(ce / a) / lnb
        if den <= 0.0:
            return None, 2
        s = 1.0 / den
        if psi[k] > 0.0:
            sat[k] = True
            theta[k] = theta_s
            thpsi[k] = 0.0
            thc[k] = 0.0
            K[k] = K_s
            dK[k] = 0.0
            continue
        sat[k] = False
        ds = s * s * b / (lnb * (ce + a)) if c[k] <= c_cap else 0.0
        x = -alpha * s * psi[k]
        if x > 0.0:
            lx = log(x)
            xn = exp(n * lx)
            lbase = log1p(xn)
            S = exp(-m * lbase)
            dS = -m * n * exp((n - 1.0) * lx - (m + 1.0) * lbase)
        else:
            S = 1.0
            dS = 0.0
        th = theta_r + span * S
        theta[k] = th
        thpsi[k] = -span * dS * alpha * s
        thc[k] = span * dS * (-alpha * psi[k]) * ds
        lth = log(th)
        inner = 1.0 - exp(inv_m * lth)
        sq = sqrt(th)
        if inner > 0.0:
            im = exp(m * log(inner))
            bracket = 1.0 - im
            dK[k] = K_s * (0.5 * bracket / sq + sq * (im / inner) * exp((inv_m - 1.0) * lth))
        else:
            bracket = 1.0
            dK[k] = INFINITY
        K[k] = K_s * sq * bracket
    return (theta_a, thpsi_a, thc_a, K_a, dK_a, sat_a), 0


def mass_data(double[::1] areas, wq_in, pos_in, Py_ssize_t nnz):
    cdef double[:, ::1] wq = np.ascontiguousarray(wq_in, dtype=np.float64)
    cdef long[:, ::1] pos = np.ascontiguousarray(pos_in, dtype=np.int64)
    out_a = np.zeros(nnz)
    cdef double[::1] out = out_a
    cdef Py_ssize_t t, q, i, j, T = areas.shape[0]
    cdef double w
    for t in range(T):
        for q in range(3):
            w = areas[t] / 3.0 * wq[t, q]
            for i in range(3):
                if PHI[q][i] == 0.0:
                    continue
                for j in range(3):
                    out[pos[t, 3 * i + j]] += w * PHI[q][i] * PHI[q][j]
    return out_a


def stiffness_data(double[::1] areas, double[:, :, ::1] grads, kq_in, pos_in, Py_ssize_t nnz):
    cdef double[:, ::1] kq = np.ascontiguousarray(kq_in, dtype=np.float64)
    cdef long[:, ::1] pos = np.ascontiguousarray(pos_in, dtype=np.int64)
    out_a = np.zeros(nnz)
    cdef double[::1] out = out_a
    cdef Py_ssize_t t, i, j, T = areas.shape[0]
    cdef double kbar
    for t in range(T):
        kbar = areas[t] * (kq[t, 0] + kq[t, 1] + kq[t, 2]) / 3.0
        for i in range(3):
            for j in range(3):
                out[pos[t, 3 * i + j]] += kbar * (grads[t, i, 0] * grads[t, j, 0]
                                                   + grads[t, i, 1] * grads[t, j, 1])
    return out_a


def advection_data(double[::1] areas, double[:, :, ::1] grads, vec_in, wq_in, pos_in, Py_ssize_t nnz):
    cdef double[:, ::1] vec = np.ascontiguousarray(vec_in, dtype=np.float64)
    cdef double[:, ::1] wq = np.ascontiguousarray(wq_in, dtype=np.float64)
    cdef long[:, ::1] pos = np.ascontiguousarray(pos_in, dtype=np.int64)
    out_a = np.zeros(nnz)
    cdef double[::1] out = out_a
    cdef Py_ssize_t t, q, i, j, T = areas.shape[0]
    cdef double gi, wj[3]
    for t in range(T):
        for j in range(3):
            wj[j] = 0.0
            for q in range(3):
                wj[j] += wq[t, q] * PHI[q][j]
            wj[j] *= areas[t] / 3.0
        for i in range(3):
            gi = vec[t, 0] * grads[t, i, 0] + vec[t, 1] * grads[t, i, 1]
            for j in range(3):
                out[pos[t, 3 * i + j]] += gi * wj[j]
    return out_a


def flux_load(double[::1] areas, double[:, :, ::1] grads, kq_in, direction, tri_in, Py_ssize_t n_nodes):
    cdef double[:, ::1] kq = np.ascontiguousarray(kq_in, dtype=np.float64)
    cdef long[:, ::1] tri = np.ascontiguousarray(tri_in, dtype=np.int64)
    cdef double ex = direction[0], ey = direction[1]
    out_a = np.zeros(n_nodes)
    cdef double[::1] out = out_a
    cdef Py_ssize_t t, i, T = areas.shape[0]
    cdef double kbar
    for t in range(T):
        kbar = areas[t] * (kq[t, 0] + kq[t, 1] + kq[t, 2]) / 3.0
        for i in range(3):
            out[tri[t, i]] += kbar * (ex * grads[t, i, 0] + ey * grads[t, i, 1])
    return out_a


def source_load(double[::1] areas, fq_in, tri_in, Py_ssize_t n_nodes):
    cdef double[:, ::1] fq = np.ascontiguousarray(fq_in, dtype=np.float64)
    cdef long[:, ::1] tri = np.ascontiguousarray(tri_in, dtype=np.int64)
    out_a = np.zeros(n_nodes)
    cdef double[::1] out = out_a
    cdef Py_ssize_t t, q, i, T = areas.shape[0]
    for t in range(T):
        for q in range(3):
            for i in range(3):
                out[tri[t, i]] += areas[t] / 3.0 * fq[t, q] * PHI[q][i]
    return out_a
