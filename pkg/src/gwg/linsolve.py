"""Solvers for the reduced SPD system: Jacobi-preconditioned conjugate
gradients, and a dense Cholesky path used as an oracle and for eigenvalue
checks on small meshes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConfigError, NonConvergenceError, SolverError


@dataclass
class CgReport:
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list)


def is_symmetric(a, tol: float = 0.0) -> bool:
    """Check numerical symmetry of a sparse matrix."""
    d = a - a.T
    if d.nnz == 0:
        return True
    return float(np.abs(d.data).max()) <= tol


def solve_cg(a, b, rel_tol: float = 1e-12, max_iters: int | None = None,
             record_history: bool = False):
    """Jacobi-preconditioned CG on an SPD matrix.

    Stops when ||A x - b|| / ||b|| <= rel_tol.  Returns (x, CgReport);
    raises :class:`NonConvergenceError` carrying the best iterate if the
    iteration budget runs out, which usually signals an indefinite matrix
    or bad scaling.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iters is None:
        max_iters = max(1000, 10 * n)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), CgReport(0, 0.0, True)

    diag = np.asarray(a.diagonal() if sp.issparse(a) else np.diag(a),
                      dtype=float)
    if np.any(diag <= 0.0):
        raise SolverError("matrix has a nonpositive diagonal entry; "
                          "not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    history = [np.sqrt(rz)]
    best_x = x.copy()
    best_res = float(np.linalg.norm(r)) / b_norm

    for it in range(1, max_iters + 1):
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            raise SolverError(
                f"CG breakdown at iteration {it}: p^T A p = {pap}; "
                "matrix is not positive definite")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = float(np.linalg.norm(r)) / b_norm
        if res < best_res:
            best_res = res
            best_x = x.copy()
        z = inv_diag * r
        rz_new = float(r @ z)
        if record_history:
            history.append(np.sqrt(rz_new))
        if res <= rel_tol:
            return x, CgReport(it, res, True,
                               history if record_history else [])
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new

    raise NonConvergenceError(
        f"CG did not converge in {max_iters} iterations "
        f"(residual {best_res:.3e})", best_x, best_res, max_iters)


def solve_dense(a, b, cap: int = 5000) -> np.ndarray:
    """Dense Cholesky solve; oracle path for meshes below ``cap`` DOFs."""
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if n > cap:
        raise ConfigError(f"dense solve of dimension {n} exceeds cap {cap}")
    dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    try:
        factor = sla.cho_factor(dense)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense Cholesky failed: {exc}; matrix is not "
                          "positive definite") from exc
    return sla.cho_solve(factor, b)
