"""Solver fixed point, dual machinery, certificates and invariants."""

import dataclasses
import math

import numpy as np
import pytest

from alphari import (AlphaIsOne, DualBoundViolation, DualVariables,
                     Experiment, SolverOptions, alpha_mutual_information,
                     barycenter, build_problem, certify, dual_jacobian,
                     dual_residual, expected_utility, solve, solve_duals,
                     tilt_function, update_experiment)

from conftest import asym_2x2, make_tracking, random_problem


# ------------------------------------------------------------ worked cases

def test_binary_tracking_order_two():
    # h = 1.6, kappa = 1: the optimal diagonal weight is exactly 3/4 and
    # the information cost is log(5/4).
    p = make_tracking(n=2, h=1.6, l=0.0, kappa=1.0, alpha=2.0)
    sol = solve(p)
    assert sol.certified
    assert sol.experiment.kernel[0, 0] == pytest.approx(0.75, abs=1e-9)
    assert sol.experiment.kernel[1, 1] == pytest.approx(0.75, abs=1e-9)
    assert sol.cost_nats == pytest.approx(math.log(1.25), abs=1e-9)
    want_obj = 0.75 * 1.6 - math.log(1.25)
    assert sol.objective_net_utility == pytest.approx(want_obj, abs=1e-9)


def test_binary_tracking_order_two_corner():
    # Above the h = 2 threshold the solution is exactly full revelation.
    p = make_tracking(n=2, h=2.5, l=0.0, kappa=1.0, alpha=2.0)
    sol = solve(p)
    assert sol.certified
    np.testing.assert_allclose(sol.experiment.kernel, np.eye(2), atol=1e-8)
    assert sol.cost_nats == pytest.approx(math.log(2.0), abs=1e-10)
    assert sol.objective_net_utility == pytest.approx(
        2.5 - math.log(2.0), abs=1e-9)


def test_shannon_binary_diagonal_weight():
    p = make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)
    sol = solve(p)
    v = math.e / (1.0 + math.e)
    assert sol.certified
    assert sol.experiment.kernel[0, 0] == pytest.approx(v, abs=1e-8)
    np.testing.assert_allclose(sol.marginal, [0.5, 0.5], atol=1e-9)


# ------------------------------------------------------------ tilt function

def test_tilt_function_values():
    assert tilt_function(8.0, 2.0) == pytest.approx(4.0, abs=1e-14)
    assert tilt_function(-4.0, 0.5) == pytest.approx(1.0 / 16.0, abs=1e-16)
    # thresholding outside the natural domain
    assert tilt_function(-1.0, 2.0) == 0.0
    assert tilt_function(0.0, 2.0) == 0.0
    assert tilt_function(1.0, 0.5) == math.inf
    # vectorized form
    out = tilt_function(np.array([8.0, -1.0]), 2.0)
    np.testing.assert_allclose(out, [4.0, 0.0])
    with pytest.raises(AlphaIsOne):
        tilt_function(1.0, 1.0)


# --------------------------------------------------------- dual machinery

def test_dual_residual_matches_kernel_rows():
    p = random_problem(2)  # alpha = 2 instance
    sol = solve(p)
    q = sol.barycenter.q
    bound = p.prior * p.payoff.max(axis=1) / p.kappa
    lam = sol.duals.lam - 0.05 * p.prior  # interior for alpha > 1
    assert np.all(lam < bound)
    E = update_experiment(q, DualVariables(lam), p)
    res = dual_residual(lam, q, p)
    np.testing.assert_allclose(res, E.kernel.sum(axis=1) - 1.0, atol=1e-12)


def test_dual_residual_zero_at_solution():
    for i in (0, 1, 2):
        p = random_problem(i)
        sol = solve(p)
        res = dual_residual(sol.duals, sol.barycenter, p)
        assert np.max(np.abs(res)) <= 1e-8


def test_dual_residual_near_bound_tends_to_minus_one():
    p = make_tracking(n=2, h=1.6, l=0.0, kappa=1.0, alpha=2.0)
    sol = solve(p)
    bound = p.prior * p.payoff.max(axis=1) / p.kappa
    lam = np.array(sol.duals.lam)
    lam[0] = bound[0] - 1e-13
    res = dual_residual(lam, sol.barycenter, p)
    assert res[0] == pytest.approx(-1.0, abs=1e-6)


def test_solve_duals_shannon_closed_form():
    p = make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)
    duals = solve_duals(np.array([0.5, 0.5]), p)
    want = 0.5 * math.log(0.5 * math.e + 0.5)
    np.testing.assert_allclose(duals.lam, want, atol=1e-14)


def test_solve_duals_fuzz_feasibility():
    r = np.random.default_rng(77)
    for i in range(12):
        n = int(r.integers(2, 5))
        m = int(r.integers(2, 5))
        u = r.uniform(0.0, 2.0, (n, m))
        mu = r.dirichlet(np.ones(n))
        kap = float(r.uniform(0.3, 1.5))
        a = (0.5, 2.0)[i % 2]
        p = build_problem(u, mu, kap, a)
        q = r.dirichlet(np.ones(m))
        duals = solve_duals(q, p)
        res = dual_residual(duals, q, p)
        assert np.max(np.abs(res)) <= 1e-12
        bound = mu * u.max(axis=1) / kap
        if a < 1.0:
            assert np.all(duals.lam > bound)
        else:
            assert np.all(duals.lam < bound)


def test_dual_jacobian_matches_finite_differences():
    for i in range(3):
        r = np.random.default_rng(7000 + i)
        n = int(r.integers(2, 6))
        m = int(r.integers(2, 6))
        u = r.uniform(0.0, 2.0, (n, m))
        mu = r.dirichlet(np.ones(n))
        kap = float(r.uniform(0.3, 1.5))
        a = (0.5, 0.8, 1.5, 2.0, 3.0)[i % 5]
        p = build_problem(u, mu, kap, a)
        q = r.dirichlet(np.ones(m))
        bound = mu * u.max(axis=1) / kap
        t = r.uniform(0.5, 1.5, n)
        lam = bound + t * mu if a < 1.0 else bound - t * mu
        J = dual_jacobian(lam, q, p)
        h = 1e-6
        Jfd = np.empty_like(J)
        for k in range(n):
            dv = np.zeros(n)
            dv[k] = h
            Jfd[:, k] = (dual_residual(lam + dv, q, p)
                         - dual_residual(lam - dv, q, p)) / (2 * h)
        scale = max(1.0, float(np.abs(J).max()))
        assert np.abs(J - Jfd).max() / scale <= 1e-4


def test_update_experiment_zero_weight_column():
    p = build_problem([[1.0, 0.2, 0.6], [0.1, 0.8, 0.5]], [0.5, 0.5],
                      0.7, 2.0)
    q = np.array([0.6, 0.4, 0.0])
    duals = solve_duals(q, p)
    E = update_experiment(q, duals, p)
    assert np.all(E.kernel[:, 2] == 0.0)
    np.testing.assert_allclose(E.kernel.sum(axis=1), 1.0, atol=1e-12)


def test_update_experiment_shannon_logit():
    p = build_problem([[1.0, 0.2], [0.1, 0.8]], [0.5, 0.5], 0.7, 1.0)
    q = np.array([0.3, 0.7])
    E = update_experiment(q, DualVariables(np.zeros(2)), p)
    w = q[None, :] * np.exp(p.payoff / p.kappa)
    np.testing.assert_allclose(E.kernel, w / w.sum(axis=1, keepdims=True),
                               atol=1e-14)


def test_update_experiment_bound_violations():
    p_lo = build_problem([[1.0, 0.2], [0.1, 0.8]], [0.5, 0.5], 0.7, 0.5)
    bound = p_lo.prior * p_lo.payoff.max(axis=1) / p_lo.kappa
    q = np.array([0.5, 0.5])
    with pytest.raises(DualBoundViolation):
        update_experiment(q, DualVariables(bound), p_lo)
    p_hi = build_problem([[1.0, 0.2], [0.1, 0.8]], [0.5, 0.5], 0.7, 2.0)
    bound = p_hi.prior * p_hi.payoff.max(axis=1) / p_hi.kappa
    with pytest.raises(DualBoundViolation):
        update_experiment(q, DualVariables(bound), p_hi)


# ------------------------------------------------------------- certificates

def test_certify_recomputes_stored_certificate():
    p = random_problem(4)
    sol = solve(p)
    c = certify(sol, p)
    assert c.stationarity_residual == sol.certificate.stationarity_residual
    assert c.primal_residual == sol.certificate.primal_residual
    assert c.complementarity_residual == sol.certificate.complementarity_residual
    assert c.psi == sol.certificate.psi
    assert c.psi_residual == sol.certificate.psi_residual
    np.testing.assert_array_equal(c.delta, sol.certificate.delta)


def test_certify_detects_perturbed_kernel():
    p = random_problem(4)
    sol = solve(p)
    assert sol.certificate.stationarity_residual <= 1e-10
    k2 = np.array(sol.experiment.kernel)
    k2[0, 0] += 1e-3
    k2[0] /= k2[0].sum()
    wrong = dataclasses.replace(sol, experiment=Experiment(k2))
    c2 = certify(wrong, p)
    assert c2.stationarity_residual > 1e-5
    assert not c2.within(1e-8)


# ----------------------------------------------------------- solver options

def test_solver_options_validation():
    with pytest.raises(ValueError, match="tol_q"):
        SolverOptions(tol_q=0.0)
    with pytest.raises(ValueError, match="newton_tol"):
        SolverOptions(newton_tol=-1e-9)
    with pytest.raises(ValueError, match="max_iters"):
        SolverOptions(max_iters=0)
    with pytest.raises(ValueError, match="newton_max_iters"):
        SolverOptions(newton_max_iters=0)
    opts = SolverOptions()
    assert opts.tol_q == 1e-10
    assert opts.tol_obj == 1e-12
    assert opts.max_iters == 10000
    assert opts.prune_threshold == 1e-12


def test_honest_nonconvergence():
    p = asym_2x2()
    sol = solve(p, SolverOptions(max_iters=3))
    assert not sol.converged
    assert not sol.certified
    assert sol.iterations == len(sol.history)
    assert np.isfinite(sol.objective_net_utility)
    full = solve(p)
    assert full.certified
    np.testing.assert_allclose(full.marginal, [0.85278859, 0.14721141],
                               atol=1e-6)


def test_solve_is_deterministic():
    p = random_problem(9)
    a = solve(p)
    b = solve(p)
    np.testing.assert_array_equal(a.experiment.kernel, b.experiment.kernel)
    assert a.iterations == b.iterations
    assert a.objective_net_utility == b.objective_net_utility


def test_solution_arrays_are_read_only():
    p = random_problem(0)
    sol = solve(p)
    with pytest.raises(ValueError):
        sol.marginal[0] = 0.5
    with pytest.raises(ValueError):
        sol.experiment.kernel[0, 0] = 0.5
    with pytest.raises(ValueError):
        sol.tilt[0, 0] = 0.0


# --------------------------------------------------------- corpus invariants

def test_corpus_all_certified(corpus):
    bad = [i for i, (_, s) in enumerate(corpus) if not s.certified]
    assert bad == []


def test_corpus_structural_invariants(corpus):
    for p, sol in corpus:
        k = sol.experiment.kernel
        assert k.shape == (p.n_states, p.n_actions)
        assert np.all(k >= 0.0)
        np.testing.assert_allclose(k.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(sol.marginal, p.prior @ k, atol=1e-12)
        # pruning is decisive: no straggler marginal mass
        tiny = (sol.marginal > 0) & (sol.marginal < 1e-12)
        assert not np.any(tiny)
        # barycenter weights live exactly on the marginal support
        assert np.array_equal(sol.barycenter.q > 0, sol.marginal > 0)
        if p.alpha <= 1.0:
            live = sol.marginal > 0
            assert k[:, live].min() > 0.0


def test_corpus_objective_decomposition(corpus):
    for p, sol in corpus:
        util = expected_utility(p, sol.experiment.kernel)
        assert sol.objective_net_utility == pytest.approx(
            util - p.kappa * sol.cost_nats, abs=1e-10)
        outside = alpha_mutual_information(sol.experiment.kernel, p.prior,
                                           p.alpha)
        assert sol.cost_nats == pytest.approx(outside, abs=1e-9)
        assert 0.0 < sol.certificate.psi <= 1.0


def test_corpus_barycenter_consistency(corpus):
    for p, sol in corpus:
        q = barycenter(sol.experiment.kernel, p.prior, p.alpha).q
        np.testing.assert_allclose(sol.barycenter.q, q, atol=1e-12)


def test_corpus_posteriors(corpus):
    for p, sol in corpus:
        k = sol.experiment.kernel
        live = np.nonzero(sol.marginal > 0)[0]
        assert len(sol.posteriors) == len(live)
        for post, j in zip(sol.posteriors, live):
            assert post.signal == p.actions[j]
            assert post.weight == pytest.approx(sol.marginal[j], abs=1e-15)
            want = p.prior * k[:, j] / sol.marginal[j]
            np.testing.assert_allclose(post.gamma, want, atol=1e-12)
            assert post.gamma.sum() == pytest.approx(1.0, abs=1e-9)


def test_corpus_certificate_residuals(corpus):
    for p, sol in corpus:
        c = sol.certificate
        for r in (c.stationarity_residual, c.primal_residual,
                  c.complementarity_residual, c.psi_residual):
            assert 0.0 <= r <= 1e-8
        assert c.delta.min(initial=0.0) >= -1e-10
        # duals stay strictly inside their bounds
        bound = p.prior * p.payoff.max(axis=1) / p.kappa
        if p.alpha < 1.0:
            assert np.all(sol.duals.lam > bound)
        elif p.alpha > 1.0:
            assert np.all(sol.duals.lam < bound)


def test_corpus_monotone_descent(corpus):
    for _, sol in corpus:
        objs = np.array([rec.objective for rec in sol.history])
        if objs.size < 2:
            continue
        slack = 1e-12 * np.maximum(1.0, np.abs(objs[:-1]))
        assert np.all(objs[1:] <= objs[:-1] + slack)


def test_corpus_tilt_definition(corpus):
    for p, sol in corpus:
        want = p.payoff / p.kappa - (sol.duals.lam / p.prior)[:, None]
        np.testing.assert_allclose(sol.tilt, want, atol=1e-12)


# ----------------------------------------------------- structural stability

def test_shannon_continuity_in_order():
    for i in range(10):
        p = random_problem(3 * i + 1)
        assert p.alpha == 1.0
        sol = solve(p)
        for a in (1.0 - 1e-3, 1.0 + 1e-3):
            pa = build_problem(p.payoff, p.prior, p.kappa, a)
            sa = solve(pa)
            diff = np.abs(sa.experiment.kernel - sol.experiment.kernel).max()
            assert diff <= 1e-2


def test_payoff_shift_invariance():
    p = random_problem(7)
    sol = solve(p)
    flat = solve(p.with_payoff(p.payoff + 3.7))
    np.testing.assert_allclose(flat.experiment.kernel,
                               sol.experiment.kernel, atol=1e-8)
    rowshift = np.linspace(-1.0, 2.0, p.n_states)[:, None]
    tilted = solve(p.with_payoff(p.payoff + rowshift))
    np.testing.assert_allclose(tilted.experiment.kernel,
                               sol.experiment.kernel, atol=1e-8)


def test_duplicate_state_compression():
    u3 = np.array([[1.5, 0.2], [1.5, 0.2], [0.1, 1.1]])
    mu3 = np.array([0.35, 0.25, 0.4])
    u2 = np.array([[1.5, 0.2], [0.1, 1.1]])
    mu2 = np.array([0.6, 0.4])
    for a in (0.5, 2.0):
        s3 = solve(build_problem(u3, mu3, 0.7, a))
        s2 = solve(build_problem(u2, mu2, 0.7, a))
        # states with identical payoffs are treated identically
        np.testing.assert_allclose(s3.experiment.kernel[0],
                                   s3.experiment.kernel[1], atol=1e-10)
        np.testing.assert_allclose(s3.marginal, s2.marginal, atol=1e-8)
        assert s3.cost_nats == pytest.approx(s2.cost_nats, abs=1e-8)
        assert s3.objective_net_utility == pytest.approx(
            s2.objective_net_utility, abs=1e-8)


def test_support_property_names_actions():
    p = build_problem([[1.0, 0.0, 0.9], [0.0, 1.0, 0.9]], [0.5, 0.5],
                      1.0, 1.0, actions=["left", "right", "mid"])
    sol = solve(p)
    assert set(sol.support) == {a for a, w in zip(p.actions, sol.marginal)
                                if w > 0}
