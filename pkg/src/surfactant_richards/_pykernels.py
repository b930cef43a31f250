"""Pure numpy implementations of the hot kernels.

Same signatures as the compiled ``_ckernels`` module. Quadrature is the
3-point edge-midpoint rule; ``wq``-style arguments have shape
``(n_triangles, 3)`` with one value per quadrature point.
"""
import math

import numpy as np

# basis values at the edge midpoints, PHI[q, i]
PHI = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def vg_fields(psi, c, theta_r, theta_s, n, alpha, K_s, a, b, log_base, c_cap=math.inf):
    """Water content, its partial derivatives, conductivity and dK/dtheta.

    Returns a 6-tuple of flat arrays plus an error flag (0 ok, 1 negative
    concentration, 2 concentration beyond the scaling's validity).
    """
    psi = np.ascontiguousarray(psi, dtype=float).ravel()
    c = np.ascontiguousarray(c, dtype=float).ravel()
    if np.any(c < 0.0):
        return None, 1
    capped = c > c_cap
    ce = np.where(capped, c_cap, c)
    den = 1.0 - b * np.log1p(ce / a) / math.log(log_base)
    if np.any(den <= 0.0):
        return None, 2
    m = (n - 1.0) / n
    s = 1.0 / den
    ds = np.where(capped, 0.0, s * s * b / (math.log(log_base) * (ce + a)))
    sat = psi > 0.0
    x = np.where(sat, 0.0, -alpha * s * psi)
    base = 1.0 + x**n
    S = base ** (-m)
    dS = -m * n * x ** (n - 1.0) * base ** (-m - 1.0)
    span = theta_s - theta_r
    theta = np.where(sat, theta_s, theta_r + span * S)
    th_psi = np.where(sat, 0.0, -span * dS * alpha * s)
    th_c = np.where(sat, 0.0, span * dS * (-alpha * psi) * ds)
    inv_m = 1.0 / m
    inner = np.maximum(1.0 - theta**inv_m, 0.0)
    sq = np.sqrt(theta)
    bracket = 1.0 - inner**m
    K = np.where(sat, K_s, K_s * sq * bracket)
    with np.errstate(divide="ignore", invalid="ignore"):
        dK = K_s * (0.5 * bracket / sq + sq * inner ** (m - 1.0) * theta ** (inv_m - 1.0))
    dK = np.where(sat, 0.0, dK)
    return (theta, th_psi, th_c, K, dK, sat), 0


def mass_data(areas, wq, pos, nnz):
    """CSR data of M_ij = sum_q |T|/3 w_q phi_i(q) phi_j(q)."""
    local = np.einsum("t,tq,qi,qj->tij", areas / 3.0, wq, PHI, PHI)
    return np.bincount(pos.ravel(), weights=local.ravel(), minlength=nnz)


def stiffness_data(areas, grads, kq, pos, nnz):
    """CSR data of A_ij = sum_q |T|/3 k_q grad phi_i . grad phi_j."""
    kbar = areas * kq.mean(axis=1)
    local = np.einsum("t,tid,tjd->tij", kbar, grads, grads)
    return np.bincount(pos.ravel(), weights=local.ravel(), minlength=nnz)


def advection_data(areas, grads, vec, wq, pos, nnz):
    """CSR data of B_ij = sum_q |T|/3 w_q phi_j(q) (vec_T . grad phi_i)."""
    gi = np.einsum("tid,td->ti", grads, vec)
    wj = np.einsum("tq,qj->tj", wq, PHI) * (areas / 3.0)[:, None]
    local = gi[:, :, None] * wj[:, None, :]
    return np.bincount(pos.ravel(), weights=local.ravel(), minlength=nnz)


def flux_load(areas, grads, kq, direction, triangles, n_nodes):
    """b_i = sum_q |T|/3 k_q direction . grad phi_i."""
    kbar = areas * kq.mean(axis=1)
    local = kbar[:, None] * np.einsum("tid,d->ti", grads, np.asarray(direction, dtype=float))
    return np.bincount(triangles.ravel(), weights=local.ravel(), minlength=n_nodes)


def source_load(areas, fq, triangles, n_nodes):
    """b_i = sum_q |T|/3 f_q phi_i(q)."""
    local = (fq @ PHI) * (areas / 3.0)[:, None]
    return np.bincount(triangles.ravel(), weights=local.ravel(), minlength=n_nodes)
