"""Krylov solver checks against dense LAPACK factorizations."""

import numpy as np
import pytest

from schrodlab.solvers import (IndefiniteOperatorError, conjugate_gradient,
                               lanczos_smallest)


def random_hpd(n, rng, shift=0.5):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a.conj().T @ a / n + shift * np.eye(n)


def test_cg_matches_dense_solve():
    rng = np.random.default_rng(0)
    a = random_hpd(80, rng)
    b = rng.standard_normal(80) + 1j * rng.standard_normal(80)
    result = conjugate_gradient(lambda v: a @ v, b, tol=1e-12, max_iter=500)
    assert result.converged
    assert np.linalg.norm(a @ result.solution - b) <= 1e-11 * np.linalg.norm(b)


def test_cg_zero_rhs():
    result = conjugate_gradient(lambda v: v, np.zeros(10, complex))
    assert result.converged and result.iterations == 0


def test_cg_reports_nonconvergence():
    rng = np.random.default_rng(1)
    a = random_hpd(120, rng, shift=1e-9)
    b = rng.standard_normal(120) + 1j * rng.standard_normal(120)
    result = conjugate_gradient(lambda v: a @ v, b, tol=1e-14, max_iter=3)
    assert not result.converged
    assert result.relative_residual > 0


def test_cg_aborts_on_indefinite_operator():
    b = np.ones(16, complex)
    with pytest.raises(IndefiniteOperatorError):
        conjugate_gradient(lambda v: -v, b)


def test_preconditioned_cg_matches_plain():
    rng = np.random.default_rng(2)
    diag = np.exp(rng.uniform(0.0, 12.0, size=150))
    a = np.diag(diag) + random_hpd(150, rng, shift=0.0)
    b = rng.standard_normal(150) + 1j * rng.standard_normal(150)
    plain = conjugate_gradient(lambda v: a @ v, b, tol=1e-11, max_iter=2000)
    inv = 1.0 / diag
    pcg = conjugate_gradient(lambda v: a @ v, b, tol=1e-11, max_iter=2000,
                             precondition=lambda v: inv * v)
    assert pcg.converged
    assert pcg.iterations <= plain.iterations
    assert np.linalg.norm(pcg.solution - plain.solution) \
        <= 1e-8 * np.linalg.norm(plain.solution)


def test_lanczos_smallest_matches_eigh():
    rng = np.random.default_rng(3)
    n = 200
    a = random_hpd(n, rng, shift=0.0)
    a /= np.linalg.norm(a, 2)  # spectrum in [0, 1]
    exact = np.linalg.eigvalsh(a)[0]
    result = lanczos_smallest(lambda v: a @ v, n, upper_bound=1.0, seed=7,
                              tol=1e-11)
    assert result.converged
    assert result.eigenvalue == pytest.approx(exact, abs=1e-10)
    rayleigh = np.vdot(result.eigenvector, a @ result.eigenvector).real
    assert rayleigh == pytest.approx(exact, abs=1e-9)


def test_lanczos_deterministic_in_seed():
    rng = np.random.default_rng(4)
    a = random_hpd(60, rng, shift=0.0)
    a /= np.linalg.norm(a, 2)
    r1 = lanczos_smallest(lambda v: a @ v, 60, 1.0, seed=11)
    r2 = lanczos_smallest(lambda v: a @ v, 60, 1.0, seed=11)
    assert r1.eigenvalue == r2.eigenvalue
    assert np.array_equal(r1.eigenvector, r2.eigenvector)


def test_lanczos_handles_indefinite_reflection():
    # margins of calibration can be negative; the reflection trick must not care
    rng = np.random.default_rng(5)
    herm = random_hpd(80, rng, shift=0.0)
    a = herm - 0.5 * np.eye(80)
    exact = np.linalg.eigvalsh(a)[0]
    upper = float(np.linalg.eigvalsh(a)[-1]) + 1.0
    result = lanczos_smallest(lambda v: a @ v, 80, upper_bound=upper, seed=2,
                              tol=1e-10)
    assert result.eigenvalue == pytest.approx(exact, abs=1e-9)
    assert exact < 0
