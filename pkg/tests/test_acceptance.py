"""Acceptance suite: one test per release criterion, at its stated
tolerance, each reporting a single PASS/FAIL line."""

import math
import time

import numpy as np

from alphari import (IncentivePerturbation, SymmetricTrackingProblem,
                     alpha_mutual_information, attention_elasticity_fd,
                     attention_elasticity_symmetric, build_problem,
                     consideration_set, dual_jacobian, dual_residual,
                     grid_solve_2x2, projected_gradient_solve, solve,
                     ucc_closed_form_binary, ucc_general)

import conftest
from conftest import make_tracking

E_RATIO = 0.7310585786300049


def record(num, name, ok, detail):
    line = "[acceptance] criterion %02d (%s): %s (%s)" % (
        num, name, "PASS" if ok else "FAIL", detail)
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_binary_shannon_accuracy():
    p = make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)
    solve(p)  # warm the code paths before timing
    best = math.inf
    sol = None
    for _ in range(5):
        t0 = time.perf_counter()
        sol = solve(p)
        best = min(best, time.perf_counter() - t0)
    err = abs(float(sol.experiment.kernel[0, 0]) - E_RATIO)
    ok = err <= 1e-6 and best < 0.010
    record(1, "binary entropic accuracy", ok,
           "err=%.2e time=%.1fms" % (err, 1e3 * best))


def test_criterion_02_binary_curve_matches_closed_form():
    p0 = make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)
    vs = np.linspace(0.5, 1.0, 50)
    worst = 0.0
    t0 = time.perf_counter()
    for a in (0.5, 1.0, 2.0):
        p = build_problem(p0.payoff, p0.prior, 1.0, a)
        for v, pt in zip(vs, ucc_general(p, vs)):
            worst = max(worst,
                        abs(pt.y - ucc_closed_form_binary(float(v), a)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 5.0
    record(2, "general curve vs binary closed form", ok,
           "worst=%.2e time=%.2fs" % (worst, elapsed))


def test_criterion_03_identity_kernel_cost():
    worst = 0.0
    for n in range(2, 7):
        mu = np.full(n, 1.0 / n)
        for a in (0.5, 1.0, 2.0, 4.0):
            got = alpha_mutual_information(np.eye(n), mu, a)
            worst = max(worst, abs(got - math.log(n)))
    ok = worst <= 1e-12
    record(3, "identity kernel costs log n", ok, "worst=%.2e" % worst)


def test_criterion_04_entropic_unit_elasticity():
    kept = 0
    seed = 0
    worst_own = 0.0
    worst_cross = 0.0
    while kept < 20 and seed < 400:
        r = np.random.default_rng(2000 + seed)
        seed += 1
        n = int(r.integers(2, 5))
        m = int(r.integers(2, 5))
        u = r.uniform(0.0, 2.0, (n, m))
        mu = r.dirichlet(np.ones(n))
        kap = float(r.uniform(0.4, 1.5))
        p = build_problem(u, mu, kap, 1.0)
        sol = solve(p)
        if not sol.certified:
            continue
        P = np.asarray(sol.experiment.kernel)
        if P.min() <= 1e-6 or np.asarray(sol.marginal).min() <= 1e-6:
            continue
        w = int(r.integers(0, n))
        w2 = (w + 1) % n
        own = attention_elasticity_fd(p, 0, 1, w)
        cross = attention_elasticity_fd(
            p, 0, 1, w,
            perturbation=IncentivePerturbation.entry(0, w2))
        kept += 1
        worst_own = max(worst_own, abs(own.elasticity - 1.0))
        worst_cross = max(worst_cross, abs(cross.elasticity))
    ok = kept == 20 and worst_own <= 2e-3 and worst_cross <= 2e-3
    record(4, "entropic own/cross elasticity", ok,
           "kept=%d own=%.2e cross=%.2e" % (kept, worst_own, worst_cross))


def test_criterion_05_elasticity_regimes():
    interior = 0
    bad_sign = 0
    worst_gap = 0.0
    shapes_ok = True
    for alpha in (0.5, 0.8, 1.5, 3.0):
        top = 0.9 * alpha / (alpha - 1.0) if alpha > 1.0 else 4.0
        eps = []
        for hk in np.linspace(0.3, top, 10):
            tr = SymmetricTrackingProblem(n=2, h=float(hk), l=0.0,
                                          kappa=1.0, alpha=alpha)
            cf = attention_elasticity_symmetric(tr)
            fd = attention_elasticity_fd(
                tr.to_decision_problem(), 0, 1, 0,
                perturbation=IncentivePerturbation.global_high())
            interior += 1
            eps.append(cf.elasticity)
            worst_gap = max(worst_gap, abs(cf.elasticity - fd.elasticity))
            lhs = np.sign(cf.elasticity - 1.0)
            rhs = np.sign(1.0 - (alpha - 1.0) * cf.l_star)
            if lhs != rhs and abs(cf.elasticity - 1.0) > 1e-9:
                bad_sign += 1
        diffs = np.diff(eps)
        if alpha < 1.0:
            # high responsiveness at small stakes, damped at large ones
            shapes_ok &= bool(np.all(diffs < 0)
                              and eps[0] > 1.0 and eps[-1] < 1.0)
        else:
            # the opposite regime: responsiveness grows with the stakes
            shapes_ok &= bool(np.all(diffs > 0) and eps[0] < 1.0)
    ok = (interior == 40 and bad_sign == 0 and worst_gap <= 1e-3
          and shapes_ok)
    record(5, "elasticity regime split", ok,
           "interior=%d bad_sign=%d gap=%.2e shapes=%s"
           % (interior, bad_sign, worst_gap, shapes_ok))


def test_criterion_06_support_boundaries(corpus):
    ok = True
    detail = []
    # sharp full-revelation threshold for order two at stakes 2
    for h, expect_corner in ((2.0 + 1e-6, True), (2.5, True),
                             (2.0 - 1e-6, False)):
        sol = solve(make_tracking(n=2, h=h, l=0.0, kappa=1.0, alpha=2.0))
        v = float(sol.experiment.kernel[0, 0])
        corner = v >= 1.0 - 1e-12
        if corner != expect_corner:
            ok = False
        detail.append("h=%.6f v=%.8f" % (h, v))
    # no posterior collapses at or below order one
    worst = math.inf
    for p, sol in corpus:
        if p.alpha > 1.0:
            continue
        for post in sol.posteriors:
            worst = min(worst, float(np.min(post.gamma)))
    if worst < 1e-10:
        ok = False
    record(6, "support boundary behavior", ok,
           "; ".join(detail) + "; min_gamma=%.3e" % worst)


def test_criterion_07_consideration_ratios(corpus):
    worst_excess = -math.inf
    worst_on = 0.0
    for p, sol in corpus:
        rep = consideration_set(sol, p)
        for a, rat in rep.ratios.items():
            worst_excess = max(worst_excess, rat - 1.0)
        for a in rep.support:
            worst_on = max(worst_on, abs(rep.ratios[a] - 1.0))
    ok = worst_excess <= 1e-8 and worst_on <= 1e-8
    record(7, "exclusion ratio test", ok,
           "excess=%.2e on_support=%.2e over %d problems"
           % (worst_excess, worst_on, len(corpus)))


def pooled(P, mu, labels):
    out = np.empty_like(P)
    for z in np.unique(labels):
        sel = labels == z
        out[sel] = (mu[sel] @ P[sel]) / mu[sel].sum()
    return out


def test_criterion_08_garbling_invariance():
    worst_drop = -math.inf
    worst_eq = 0.0
    for i in range(100):
        r = np.random.default_rng(8000 + i)
        n = int(r.integers(2, 7))
        m = int(r.integers(2, 7))
        P = r.dirichlet(np.ones(m), size=n)
        mu = r.dirichlet(np.ones(n))
        K = int(r.integers(1, n + 1))
        labels = r.integers(0, K, n)
        a = (0.5, 2.0)[i % 2]
        Pp = pooled(P, mu, labels)
        worst_drop = max(worst_drop,
                         alpha_mutual_information(Pp, mu, a)
                         - alpha_mutual_information(P, mu, a))
        mu_bar = np.empty_like(mu)
        for z in np.unique(labels):
            sel = labels == z
            w = r.dirichlet(np.ones(int(sel.sum())))
            mu_bar[sel] = mu[sel].sum() * w
        worst_eq = max(worst_eq,
                       abs(alpha_mutual_information(Pp, mu_bar, a)
                           - alpha_mutual_information(Pp, mu, a)))
    ok = worst_drop <= 1e-10 and worst_eq <= 1e-10
    record(8, "pooling and reweighting invariance", ok,
           "worst_drop=%.2e worst_eq=%.2e" % (worst_drop, worst_eq))


def test_criterion_09_post_processing_monotone():
    worst = -math.inf
    for i in range(100):
        r = np.random.default_rng(8500 + i)
        n = int(r.integers(2, 7))
        m = int(r.integers(2, 7))
        P = r.dirichlet(np.ones(m), size=n)
        mu = r.dirichlet(np.ones(n))
        k = int(r.integers(2, 7))
        M = r.dirichlet(np.ones(k), size=m)
        PM = P @ M
        for a in (0.5, 1.0, 2.0, 4.0):
            worst = max(worst, alpha_mutual_information(PM, mu, a)
                        - alpha_mutual_information(P, mu, a))
    ok = worst <= 1e-10
    record(9, "post-processing cannot gain", ok, "worst=%.2e" % worst)


def test_criterion_10_solver_vs_reference_solvers():
    worst3 = 0.0
    for seed in range(100):
        r = np.random.default_rng(1000 + seed)
        u = r.uniform(0.0, 2.0, (3, 3))
        mu = r.dirichlet(np.ones(3))
        kap = float(r.uniform(0.2, 1.5))
        a = (0.5, 0.8, 1.0, 1.5, 3.0)[seed % 5]
        p = build_problem(u, mu, kap, a)
        s = solve(p)
        d = projected_gradient_solve(p)
        worst3 = max(worst3, abs(s.objective_net_utility
                                 - d.objective_net_utility))
    worst2 = 0.0
    for i in range(12):
        r = np.random.default_rng(500 + i)
        u = r.uniform(0.0, 2.0, (2, 2))
        mu = r.dirichlet(np.ones(2))
        kap = float(r.uniform(0.2, 1.5))
        a = (0.5, 1.0, 2.0)[i % 3]
        p = build_problem(u, mu, kap, a)
        s = solve(p)
        g = grid_solve_2x2(p)
        worst2 = max(worst2, abs(s.objective_net_utility
                                 - g.objective_net_utility))
    ok = worst3 <= 1e-6 and worst2 <= 1e-6
    record(10, "agreement with reference solvers", ok,
           "descent=%.2e grid=%.2e" % (worst3, worst2))


def test_criterion_11_certificates_on_corpus(corpus):
    worst_res = 0.0
    worst_psi = 0.0
    all_cert = True
    for p, sol in corpus:
        if not sol.certified:
            all_cert = False
            continue
        c = sol.certificate
        worst_res = max(worst_res, c.stationarity_residual,
                        c.primal_residual, c.complementarity_residual)
        outside = alpha_mutual_information(sol.experiment.kernel,
                                           p.prior, p.alpha)
        worst_psi = max(worst_psi,
                        abs(c.psi - math.exp(-outside)))
    ok = all_cert and worst_res <= 1e-8 and worst_psi <= 1e-8
    record(11, "certificates on every solve", ok,
           "all_certified=%s residuals=%.2e psi_gap=%.2e"
           % (all_cert, worst_res, worst_psi))


def test_criterion_12_dual_jacobian_accuracy():
    worst = 0.0
    for i in range(50):
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
        rel = float(np.abs(J - Jfd).max()
                    / max(1.0, float(np.abs(J).max())))
        worst = max(worst, rel)
    ok = worst <= 1e-4
    record(12, "dual Jacobian vs finite differences", ok,
           "worst_rel=%.2e" % worst)


def test_criterion_13_large_problem_speed():
    times = []
    ok = True
    for seed, a in ((14, 0.5), (13, 1.0), (11, 2.0)):
        r = np.random.default_rng(seed)
        u = r.uniform(0.0, 2.0, (50, 50))
        mu = r.dirichlet(np.ones(50))
        p = build_problem(u, mu, 1.0, a)
        t0 = time.perf_counter()
        sol = solve(p)
        dt = time.perf_counter() - t0
        times.append("alpha=%g %.3fs" % (a, dt))
        if not sol.certified or dt >= 1.0:
            ok = False
    p0 = make_tracking(n=2, h=1.0, l=0.0, kappa=1.0, alpha=1.0)
    vs = np.linspace(0.5, 1.0, 20)
    t0 = time.perf_counter()
    for a in (0.5, 1.0, 2.0):
        ucc_general(build_problem(p0.payoff, p0.prior, 1.0, a), vs)
    sweep = time.perf_counter() - t0
    if sweep >= 10.0:
        ok = False
    record(13, "certified speed at scale", ok,
           "%s; sweep=%.2fs" % (", ".join(times), sweep))
