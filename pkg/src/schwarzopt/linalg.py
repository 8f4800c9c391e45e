"""Box projection, the projected-gradient stationarity measure, and a
diagonally preconditioned conjugate-gradient solver for SPD systems."""

import numpy as np


class IndefiniteMatrixError(RuntimeError):
    """CG detected non-positive curvature or failed to converge."""


def project_box(x, lower, upper):
    """Componentwise clamp of x to [lower, upper]."""
    return np.clip(x, lower, upper)


def projected_gradient(x, g, lower, upper):
    """P(x - g) - x, the stationarity residual for box constraints.

    Vanishes exactly at first-order stationary points; its Euclidean norm is
    the termination measure used by every solver in this package.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < lower) or np.any(x > upper):
        raise ValueError("projected_gradient requires a feasible point")
    return np.clip(x - g, lower, upper) - x


def solve_spd(A, b, rtol=1e-12, max_iter=None):
    """Solve A x = b for symmetric positive definite A by Jacobi-PCG.

    Terminates when ||A x - b|| <= rtol * ||b||.  Raises
    IndefiniteMatrixError on detected non-positive curvature or when the
    iteration cap (10 * dimension) is exhausted.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_iter is None:
        max_iter = max(10 * n, 50)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(n)
    diag = np.asarray(A.diagonal()) if hasattr(A, "diagonal") else np.diag(A)
    inv_diag = np.where(diag > 0.0, 1.0 / np.where(diag > 0.0, diag, 1.0), 1.0)

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(max_iter):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            raise IndefiniteMatrixError("non-positive curvature encountered in CG")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= rtol * norm_b:
            return x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise IndefiniteMatrixError(
        f"CG did not reach rtol={rtol:g} within {max_iter} iterations")
