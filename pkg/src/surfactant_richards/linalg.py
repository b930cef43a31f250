"""Direct sparse solves and 2-norm condition numbers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

EXACT_CONDITION_LIMIT = 2000


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def to_csr(matrix) -> sp.csr_matrix:
    """Square CSR copy with sorted, duplicate-free column indices."""
    A = sp.csr_matrix(matrix, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    return A


def factorize(matrix):
    """Sparse LU with partial pivoting (SuperLU, COLAMD column ordering)."""
    A = to_csr(matrix).tocsc()
    try:
        lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        diag = np.abs(A.diagonal())
        raise SingularMatrixError(
            f"{exc}; n={A.shape[0]}, min |diag|={diag.min():.3e}, "
            f"zero rows={int(np.sum(np.diff(A.tocsr().indptr) == 0))}"
        ) from exc
    u_diag = np.abs(lu.U.diagonal())
    if u_diag.size and (u_diag.min() == 0.0 or not np.all(np.isfinite(u_diag))):
        raise SingularMatrixError(f"zero pivot at column {int(np.argmin(u_diag))}")
    return lu


def solve_direct(matrix, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] == 0:
        return np.zeros(0)
    x = factorize(matrix).solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("non-finite solution")
    return x


@dataclass
class ConditionEstimate:
    value: float
    exact: bool
    converged: bool = True
    iterations: int = 0

    def __float__(self):
        return self.value


def _power_iteration(apply, n, rng, max_iterations, rtol):
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iterations + 1):
        w = apply(v)
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            return 0.0, it, True
        v = w / lam_new
        if it > 3 and abs(lam_new - lam) <= rtol * lam_new:
            return lam_new, it, True
        lam = lam_new
    return lam, max_iterations, False


def condition_number_2norm(matrix, *, exact_limit: int = EXACT_CONDITION_LIMIT,
                           max_iterations: int = 500, rtol: float = 1e-4,
                           seed: int = 0) -> ConditionEstimate:
    """Euclidean condition number sigma_max / sigma_min.

    Dense SVD up to ``exact_limit`` unknowns; above that, power iteration on
    A^T A and on (A^T A)^{-1} through one LU factorization.
    """
    A = to_csr(matrix)
    n = A.shape[0]
    if n == 0:
        return ConditionEstimate(1.0, True)
    if n <= exact_limit:
        s = scipy.linalg.svd(A.toarray(), compute_uv=False)
        if not np.isfinite(s[0]) or s[-1] <= s[0] * n * np.finfo(float).eps:
            raise SingularMatrixError("matrix is singular")
        return ConditionEstimate(float(s[0] / s[-1]), True)
    rng = np.random.default_rng(seed)
    AT = A.T.tocsr()
    lam_max, it1, ok1 = _power_iteration(lambda v: AT @ (A @ v), n, rng, max_iterations, rtol)
    lu = factorize(A)
    lam_inv, it2, ok2 = _power_iteration(
        lambda v: lu.solve(lu.solve(v, trans="T")), n, rng, max_iterations, rtol
    )
    if lam_inv == 0.0:
        raise SingularMatrixError("matrix is singular")
    return ConditionEstimate(float(np.sqrt(lam_max * lam_inv)), False, ok1 and ok2, it1 + it2)
