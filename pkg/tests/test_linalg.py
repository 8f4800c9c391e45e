import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from schwarzopt import IndefiniteMatrixError, project_box, projected_gradient, solve_spd
from schwarzopt.problems import ignition_problem

from oracles import dense_solve


def test_project_box_identity_inside():
    x = np.array([0.25, 0.5])
    assert np.array_equal(project_box(x, np.zeros(2), np.ones(2)), x)


def test_project_box_clamps():
    out = project_box(np.array([2.0, -2.0]), np.zeros(2), np.ones(2))
    assert np.array_equal(out, np.array([1.0, 0.0]))


def test_project_box_variational_characterization():
    rng = np.random.default_rng(0)
    lo, hi = -rng.random(6), rng.random(6)
    x = rng.standard_normal(6) * 3
    p = project_box(x, lo, hi)
    assert np.all(p >= lo) and np.all(p <= hi)
    for _ in range(100):
        y = lo + rng.random(6) * (hi - lo)
        assert np.linalg.norm(p - x) <= np.linalg.norm(y - x) + 1e-12


def test_project_box_idempotent_nonexpansive():
    rng = np.random.default_rng(1)
    lo, hi = -np.ones(8), np.ones(8)
    x, y = rng.standard_normal(8) * 2, rng.standard_normal(8) * 2
    px, py = project_box(x, lo, hi), project_box(y, lo, hi)
    assert np.array_equal(project_box(px, lo, hi), px)
    assert np.abs(px - py).max() <= np.abs(x - y).max() + 1e-15


def test_projected_gradient_zero_cases():
    lo, hi = np.zeros(3), np.ones(3)
    assert np.array_equal(projected_gradient(0.5 * np.ones(3), np.zeros(3), lo, hi),
                          np.zeros(3))
    # at the lower bound with positive gradient: stationary
    assert np.array_equal(projected_gradient(lo, np.ones(3), lo, hi), np.zeros(3))


def test_projected_gradient_formula():
    out = projected_gradient(np.array([0.5]), np.array([0.2]),
                             np.array([0.0]), np.array([1.0]))
    assert out == pytest.approx(np.array([-0.2]))


def test_projected_gradient_requires_feasible_point():
    with pytest.raises(ValueError):
        projected_gradient(np.array([2.0]), np.array([0.0]),
                           np.array([0.0]), np.array([1.0]))


def test_projected_gradient_iff_first_order_conditions():
    # brute force on random small boxes: zero residual exactly when each
    # component satisfies the sign conditions of bound-constrained stationarity
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = rng.integers(1, 5)
        lo = -rng.random(n)
        hi = rng.random(n)
        x = lo + rng.random(n) * (hi - lo)
        if rng.random() < 0.5:     # push some components onto a bound
            j = rng.integers(n)
            x[j] = lo[j] if rng.random() < 0.5 else hi[j]
        g = rng.standard_normal(n)
        res = projected_gradient(x, g, lo, hi)
        stationary = all(
            (abs(g[j]) < 1e-14 and lo[j] < x[j] < hi[j])
            or (x[j] == lo[j] and g[j] >= 0)
            or (x[j] == hi[j] and g[j] <= 0)
            for j in range(n))
        assert (np.linalg.norm(res) < 1e-14) == stationary


def test_solve_spd_identity():
    b = np.array([1.0, -2.0, 3.0])
    x = solve_spd(sp.identity(3, format="csr"), b)
    assert np.allclose(x, b)


def test_solve_spd_hand_example():
    A = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x = solve_spd(A, np.array([3.0, 3.0]))
    assert np.allclose(x, [1.0, 1.0], atol=1e-12)


def test_solve_spd_against_dense_oracle():
    p = ignition_problem(4)
    H = p.hessian(p.initial_guess())
    A = H + 2.0 * sp.identity(p.dim, format="csr")
    rng = np.random.default_rng(2)
    b = rng.standard_normal(p.dim)
    x = solve_spd(A, b, rtol=1e-13)
    assert np.allclose(x, dense_solve(A, b), atol=1e-10)


def test_solve_spd_detects_indefinite():
    A = sp.csr_matrix(np.diag([1.0, -1.0]))
    with pytest.raises(IndefiniteMatrixError):
        solve_spd(A, np.array([1.0, 1.0]))
