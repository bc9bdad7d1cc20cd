"""Matrix-free Krylov solvers for the Hermitian operators of the lab.

Both solvers work on flat complex vectors and take the operator as a
callable; the discrete L2 scale h^dim cancels in every coefficient, so the
plain vdot inner product is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

Operator = Callable[[np.ndarray], np.ndarray]


class IndefiniteOperatorError(RuntimeError):
    """CG met nonpositive curvature; the operator is not positive definite
    (with exact adjoints this indicates an operator/adjoint bug)."""


@dataclass
class CGResult:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool


def conjugate_gradient(apply_op: Operator, rhs: np.ndarray, tol: float = 1e-10,
                       max_iter: int = 5000, x0: np.ndarray = None,
                       precondition: Operator = None) -> CGResult:
    """(Preconditioned) CG for Hermitian positive-definite apply_op.

    Stops at the true relative residual ||b - Ax|| <= tol * ||b|| regardless
    of the preconditioner; non-convergence is reported, never silent.
    `precondition` applies an approximate inverse of apply_op (Hermitian PD).
    """
    b_norm = np.linalg.norm(rhs)
    if b_norm == 0.0:
        return CGResult(np.zeros_like(rhs), 0, 0.0, True)
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = x0.astype(np.complex128).copy()
        r = rhs - apply_op(x)
    z = precondition(r) if precondition is not None else r
    p = z.copy()
    rz_old = np.vdot(r, z).real
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ap = apply_op(p)
        curvature = np.vdot(p, ap).real
        if curvature <= 0.0:
            raise IndefiniteOperatorError(
                f"nonpositive curvature {curvature:.3e} at CG iteration {iterations}"
            )
        alpha = rz_old / curvature
        x = x + alpha * p
        r = r - alpha * ap
        res = float(np.linalg.norm(r))
        if res <= tol * b_norm:
            return CGResult(x, iterations, res / b_norm, True)
        z = precondition(r) if precondition is not None else r
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz_old) * p
        rz_old = rz_new
    return CGResult(x, iterations, float(np.linalg.norm(r) / b_norm), False)


@dataclass
class LanczosResult:
    eigenvalue: float
    eigenvector: np.ndarray
    iterations: int
    residual: float
    converged: bool


def lanczos_smallest(apply_op: Operator, size: int, upper_bound: float,
                     max_iter: int = None, seed: int = 0,
                     tol: float = 1e-11) -> LanczosResult:
    """Smallest eigenvalue of a Hermitian PSD operator with spectrum in
    [0, upper_bound].

    Runs Lanczos with full reorthogonalization on the reflected operator
    upper_bound*I - A, whose largest Ritz value converges fast; deterministic
    in `seed`.  Converged means the Ritz residual ||A v - lambda v|| of the
    returned pair is below the absolute tolerance tol (the eigenvalue error
    of a Hermitian Ritz pair is bounded by its residual).
    """
    if max_iter is None:
        max_iter = size
    max_iter = max(2, min(max_iter, size))
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    q /= np.linalg.norm(q)

    def reflected(v: np.ndarray) -> np.ndarray:
        return upper_bound * v - apply_op(v)

    basis = np.zeros((max_iter, size), dtype=np.complex128)
    alphas = np.zeros(max_iter)
    betas = np.zeros(max_iter)  # betas[j-1] couples steps j-1 and j

    basis[0] = q
    w = reflected(q)
    alphas[0] = np.vdot(q, w).real
    w = w - alphas[0] * q
    steps = 1
    for j in range(1, max_iter):
        # full reorthogonalization (twice) against the stored basis
        for _ in range(2):
            w = w - basis[:steps].T @ (basis[:steps].conj() @ w)
        beta = np.linalg.norm(w)
        if beta < 1e-14 * max(upper_bound, 1.0):
            break  # Krylov space exhausted; Ritz values are exact on it
        betas[j - 1] = beta
        q = w / beta
        basis[j] = q
        w = reflected(q)
        alphas[j] = np.vdot(q, w).real
        w = w - alphas[j] * q - beta * basis[j - 1]
        steps = j + 1
        if steps % 16 == 0:
            theta, s = _largest_ritz(alphas[:steps], betas[: steps - 1])
            # residual bound |beta_next * s_last| with beta_next ~ ||w||
            if np.linalg.norm(w) * abs(s[-1]) <= 0.05 * tol:
                break

    theta, s = _largest_ritz(alphas[:steps], betas[: steps - 1])
    vec = (basis[:steps].T @ s.astype(np.complex128))
    vec /= np.linalg.norm(vec)
    lam = upper_bound - theta
    residual = float(np.linalg.norm(apply_op(vec) - lam * vec))
    return LanczosResult(float(lam), vec, steps, residual, residual <= tol)


def _largest_ritz(alphas: np.ndarray, betas: np.ndarray):
    k = len(alphas)
    if k == 1:
        return float(alphas[0]), np.ones(1)
    try:
        vals, vecs = eigh_tridiagonal(alphas, betas, select="i",
                                      select_range=(k - 1, k - 1),
                                      lapack_driver="stebz")
        return float(vals[0]), vecs[:, 0]
    except np.linalg.LinAlgError:
        # bisection driver can fail on hard tridiagonals; fall back to dense
        t = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        vals, vecs = np.linalg.eigh(t)
        return float(vals[-1]), vecs[:, -1]
