import numpy as np
import pytest

from schwarzopt.decomposition import Decomposition, build_decomposition, extract_local
from schwarzopt.linesearch import armijo
from schwarzopt.problems import ignition_problem, minimal_surface_problem
from schwarzopt.solvers import (CONVERGED, MAX_ITERATIONS, SolverConfig,
                                newton_sqp_solve, nrasb_step, raspnb_solve,
                                run_preconditioner_only, semismooth_newton_solve,
                                tl_nrasb_step)

from oracles import QuadraticObjective, chain_laplacian, enumerate_box_qp


def _obstacle_toy(n=6, seed=0, active=True):
    """1D obstacle quadratic: discrete Laplacian with a load whose
    unconstrained minimizer dips below the zero obstacle when active=True."""
    rng = np.random.default_rng(seed)
    A = chain_laplacian(n)
    target = rng.standard_normal(n)
    if active:
        target[::2] = -np.abs(target[::2]) - 0.1
    else:
        target = np.abs(target) + 0.1
    b = -(A @ target)              # unconstrained minimizer is exactly target
    return QuadraticObjective(A, b, np.zeros(n), np.full(n, 10.0))


def _toy_decomposition(n, n_sub=2, delta=1):
    cut = n // 2
    owned = [np.arange(cut), np.arange(cut, n)]
    if n_sub == 1:
        owned = [np.arange(n)]
    overlapping = [np.arange(min(i.max() + 1 + delta, n))[max(i.min() - delta, 0):]
                   for i in owned]
    return Decomposition(len(owned), delta, owned, overlapping, n)


def test_quadratic_with_inactive_bounds_converges_in_one_iteration():
    toy = _obstacle_toy(5, active=False)
    v, rec = newton_sqp_solve(toy, toy.initial_guess())
    assert rec.converged
    assert rec.n_iterations == 1
    assert np.abs(v - np.linalg.solve(toy.A, -toy.b)).max() < 1e-9


def test_newton_sqp_matches_enumeration_on_obstacle_toy():
    toy = _obstacle_toy(6, seed=1)
    ref = enumerate_box_qp(toy.A, toy.b, toy.lower, toy.upper)
    v, rec = newton_sqp_solve(toy)
    assert rec.converged
    assert np.abs(v - ref).max() < 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_all_methods_agree_with_enumeration(seed):
    toy = _obstacle_toy(6, seed=seed)
    ref = enumerate_box_qp(toy.A, toy.b, toy.lower, toy.upper)
    dec = _toy_decomposition(6)
    runs = {
        "newton-sqp": newton_sqp_solve(toy),
        "ssn": semismooth_newton_solve(toy),
        "raspn": raspnb_solve(toy, dec),
        "nras": run_preconditioner_only(toy, dec),
    }
    for name, (v, rec) in runs.items():
        assert rec.converged, name
        assert np.abs(v - ref).max() < 1e-8, name


def test_stationary_start_returns_zero_iterations():
    toy = _obstacle_toy(5, seed=2)
    v_star, _ = newton_sqp_solve(toy)
    for solve in (newton_sqp_solve, semismooth_newton_solve):
        v, rec = solve(toy, v_star)
        assert rec.converged
        assert rec.n_iterations == 0
        assert np.array_equal(v, v_star)


def test_raspn_without_decomposition_is_newton_sqp():
    toy = _obstacle_toy(6, seed=3)
    v_a, rec_a = raspnb_solve(toy, None, None, toy.initial_guess())
    v_b, rec_b = newton_sqp_solve(toy, toy.initial_guess())
    assert np.array_equal(v_a, v_b)
    assert np.array_equal(rec_a.prn_history, rec_b.prn_history)
    assert [h.energy for h in rec_a.history] == [h.energy for h in rec_b.history]


def test_single_subdomain_sweep_is_global_solve_plus_line_search():
    p = ignition_problem(6)
    dec = build_decomposition(p.space, 1, 0)
    cfg = SolverConfig()
    v = p.initial_guess()
    v_new, info = nrasb_step(p, dec, v, cfg)
    # replicate by hand: one global inner solve, then Armijo on the aggregate
    local = extract_local(p, dec, 0, v)
    v_star, _ = newton_sqp_solve(local, v, cfg.local_config())
    delta = v_star - v
    ls = armijo(p.energy, v, delta, p.gradient(v) @ delta, cfg.line_search)
    expected = np.clip(v + ls.alpha * delta, p.lower, p.upper)
    assert info.alpha == ls.alpha
    assert np.array_equal(v_new, expected)


def test_nras_sweep_replays_scripted_oracle_on_chain():
    # 9-node chain, two subdomains, one overlap layer: replay the update rule
    # with enumeration-oracle local solves
    n = 9
    toy = _obstacle_toy(n, seed=4)
    dec = _toy_decomposition(n, delta=1)
    cfg = SolverConfig()
    v = toy.initial_guess()
    v_new, info = nrasb_step(toy, dec, v, cfg)
    delta = np.zeros(n)
    for i in range(2):
        idx = dec.overlapping[i]
        other = np.setdiff1d(np.arange(n), idx)
        # frozen-exterior quadratic in the local variables
        A_loc = toy.A[np.ix_(idx, idx)]
        b_loc = toy.b[idx] + toy.A[np.ix_(idx, other)] @ v[other]
        vi = enumerate_box_qp(A_loc, b_loc, toy.lower[idx], toy.upper[idx])
        delta[dec.owned[i]] = (vi - v[idx])[dec.owned_pos[i]]
    ls = armijo(toy.energy, v, delta, toy.gradient(v) @ delta, cfg.line_search)
    expected = np.clip(v + ls.alpha * delta, toy.lower, toy.upper)
    assert np.abs(v_new - expected).max() < 1e-8


@pytest.mark.parametrize("make", [ignition_problem, minimal_surface_problem])
def test_outer_solvers_on_small_fe_problems_agree(make):
    p = make(8)
    dec = build_decomposition(p.space, 4, 2)
    v_ref, rec_ref = newton_sqp_solve(p)
    assert rec_ref.converged
    for solve in (semismooth_newton_solve,
                  lambda obj: raspnb_solve(obj, dec),
                  lambda obj: run_preconditioner_only(obj, dec)):
        v, rec = solve(p)
        assert rec.converged
        assert np.abs(v - v_ref).max() < 1e-6


def test_two_level_solver_on_small_fe_problem():
    from schwarzopt.coarse import build_hierarchy
    p = ignition_problem(8)
    dec = build_decomposition(p.space, 4, 1)
    hier = build_hierarchy(p, 4)
    v_ref, _ = newton_sqp_solve(p)
    for driver in (raspnb_solve, run_preconditioner_only):
        v, rec = driver(p, dec, hier)
        assert rec.converged
        assert np.abs(v - v_ref).max() < 1e-6


def test_iterates_feasible_and_energy_monotone():
    p = minimal_surface_problem(8)
    dec = build_decomposition(p.space, 4, 2)
    for solve in (newton_sqp_solve,
                  lambda obj: raspnb_solve(obj, dec),
                  lambda obj: run_preconditioner_only(obj, dec)):
        v, rec = solve(p)
        assert np.all(v >= p.lower)
        assert np.all(v <= p.upper)
        energies = np.array([h.energy for h in rec.history])
        assert np.all(np.diff(energies) <= 1e-12)


def test_termination_is_sound():
    # recompute the projected-gradient norm of the returned iterate
    from schwarzopt.linalg import projected_gradient
    p = ignition_problem(8)
    cfg = SolverConfig()
    for solve in (newton_sqp_solve, semismooth_newton_solve):
        v, rec = solve(p, cfg=cfg)
        assert rec.converged
        prn = np.linalg.norm(projected_gradient(v, p.gradient(v), p.lower, p.upper))
        assert prn <= cfg.outer_tol
        assert prn == pytest.approx(rec.history[-1].prn, rel=1e-12, abs=1e-15)


def test_ssn_identifies_active_set_on_obstacle_toy():
    toy = _obstacle_toy(6, seed=5)
    ref = enumerate_box_qp(toy.A, toy.b, toy.lower, toy.upper)
    v, rec = semismooth_newton_solve(toy)
    assert rec.converged
    active_ref = np.isclose(ref, toy.lower, atol=1e-10)
    active = np.isclose(v, toy.lower, atol=1e-8)
    assert np.array_equal(active, active_ref)
    assert active.any()            # the toy is built to have active bounds


def test_max_iteration_status():
    toy = _obstacle_toy(6, seed=6)
    cfg = SolverConfig(max_outer=1)
    v, rec = semismooth_newton_solve(toy, cfg=cfg)
    if not rec.converged:
        assert rec.status == MAX_ITERATIONS
        assert rec.n_iterations == 1
    p = minimal_surface_problem(6)
    v, rec = newton_sqp_solve(p, cfg=SolverConfig(max_outer=1))
    assert rec.status == MAX_ITERATIONS
    assert not rec.converged


def test_infeasible_start_rejected():
    toy = _obstacle_toy(4, seed=7)
    bad = toy.upper + 1.0
    with pytest.raises(ValueError):
        newton_sqp_solve(toy, bad)
    with pytest.raises(ValueError):
        semismooth_newton_solve(toy, bad)


def test_history_indices_and_record_shape():
    p = ignition_problem(6)
    v, rec = newton_sqp_solve(p)
    assert [h.index for h in rec.history] == list(range(len(rec.history)))
    assert rec.n_iterations == len(rec.history) - 1
    assert rec.prn_history[-1] <= 1e-8
    assert rec.prn_history[0] > rec.prn_history[-1]


def test_tl_step_reports_coarse_information():
    from schwarzopt.coarse import build_hierarchy
    p = ignition_problem(8)
    dec = build_decomposition(p.space, 2, 1)
    hier = build_hierarchy(p, 4)
    cfg = SolverConfig()
    v = p.initial_guess()
    v_new, info = tl_nrasb_step(p, dec, hier, v, cfg)
    assert info.coarse_iterations >= 1
    assert 0.0 <= info.alpha_hat <= 1.0
    assert len(info.local_iterations) == 2
    assert np.all(v_new >= p.lower) and np.all(v_new <= p.upper)
