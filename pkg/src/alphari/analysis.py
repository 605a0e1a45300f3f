"""Behavioral quantities derived from solved problems: posterior odds and
their incentive elasticities, utility cost curves, psychometric curves,
consideration sets, and certainty events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BoundarySupport,
    GridTooCoarse,
    MaxIterationsExceeded,
    NonDifferentiablePoint,
    NotSymmetric,
    OutOfRange,
)
from .infomeasures import alpha_mutual_information
from .problem import (
    DecisionProblem,
    SymmetricTrackingProblem,
    build_problem,
    expected_utility,
    utility_bounds,
)
from .solver import Solution, SolverOptions, solve, tilt_function

#: Posterior mass below this counts as zero when scanning for certainty.
CERTAINTY_TOL = 1e-10

#: Options used for solves whose output feeds a finite difference; the
#: difference quotient amplifies solver noise by 1/(2*step), so the
#: endpoints are solved much tighter than the default.
FD_OPTS = SolverOptions(tol_q=1e-12, tol_obj=1e-15, newton_tol=1e-13,
                        max_iters=20000)


@dataclass(frozen=True)
class IncentivePerturbation:
    """Which payoff entries an incentive parameter moves.

    target is either an (action, state) label pair for a single payoff
    entry, or the string "global-high" for moving every matched-action
    payoff of a symmetric tracking problem together. theta is the
    current value of the perturbed quantity u/kappa; leave it None to
    derive it from the problem.
    """

    target: tuple[str, str] | str
    theta: float | None = None

    @classmethod
    def entry(cls, action, state, theta=None) -> "IncentivePerturbation":
        return cls(target=(action, state), theta=theta)

    @classmethod
    def global_high(cls, theta=None) -> "IncentivePerturbation":
        return cls(target="global-high", theta=theta)


@dataclass(frozen=True)
class ElasticityReport:
    """Posterior odds and their semi-elasticity in an incentive parameter."""

    gamma_odds: float
    elasticity: float
    method: str
    h_star: float | None = None
    l_star: float | None = None


class CurvePoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class ConsiderationReport:
    """Support classification of all actions with the optimality ratios.

    ratios maps every action to its exclusion-test ratio (at most 1,
    equal to 1 on the support); slack maps each excluded action to
    1 - ratio.
    """

    support: tuple[str, ...]
    ratios: dict[str, float]
    slack: dict[str, float]


@dataclass(frozen=True)
class CertaintyReport:
    """Events some posterior rules out entirely, if any."""

    certain_events: tuple[tuple[str, ...], ...]
    fully_informative: bool


def _action_index(problem: DecisionProblem, a) -> int:
    if isinstance(a, (int, np.integer)):
        if not 0 <= int(a) < problem.n_actions:
            raise OutOfRange("action index %d out of range" % int(a))
        return int(a)
    try:
        return problem.actions.index(str(a))
    except ValueError:
        raise OutOfRange("unknown action %r" % (a,)) from None


def _state_index(problem: DecisionProblem, w) -> int:
    if isinstance(w, (int, np.integer)):
        if not 0 <= int(w) < problem.n_states:
            raise OutOfRange("state index %d out of range" % int(w))
        return int(w)
    try:
        return problem.states.index(str(w))
    except ValueError:
        raise OutOfRange("unknown state %r" % (w,)) from None


def posterior_odds(solution: Solution, a, b, omega) -> float:
    """Ratio of conditional to unconditional odds of action a versus b
    in state omega: (P(a|w)/m(a)) * (m(b)/P(b|w)) with m the action
    marginal."""
    problem = solution.problem
    ia = _action_index(problem, a)
    ib = _action_index(problem, b)
    iw = _state_index(problem, omega)
    P = np.asarray(solution.experiment.kernel)
    marg = np.asarray(solution.marginal)
    if P[iw, ia] <= 0.0 or P[iw, ib] <= 0.0 or marg[ia] <= 0.0 or marg[ib] <= 0.0:
        raise BoundarySupport(
            "posterior odds need strictly positive conditional probabilities"
        )
    return float((P[iw, ia] / marg[ia]) * (marg[ib] / P[iw, ib]))


def _log_odds(sol: Solution, ia: int, ib: int, iw: int) -> float:
    P = np.asarray(sol.experiment.kernel)
    marg = np.asarray(sol.marginal)
    if P[iw, ia] <= 0.0 or P[iw, ib] <= 0.0:
        raise BoundarySupport(
            "conditional probabilities left the interior during perturbation"
        )
    return (math.log(P[iw, ia]) - math.log(marg[ia])
            + math.log(marg[ib]) - math.log(P[iw, ib]))


def _as_tracking(problem: DecisionProblem) -> SymmetricTrackingProblem:
    n = problem.n_states
    u = np.asarray(problem.payoff)
    if problem.n_actions != n:
        raise NotSymmetric("tracking problems have as many actions as states")
    if np.max(np.abs(np.asarray(problem.prior) - 1.0 / n)) > 1e-12:
        raise NotSymmetric("tracking problems have a uniform prior")
    h = float(u[0, 0])
    l = float(u[0, 1]) if n > 1 else 0.0
    expect = np.full((n, n), l)
    np.fill_diagonal(expect, h)
    if np.max(np.abs(u - expect)) > 1e-12:
        raise NotSymmetric(
            "payoff is not h on the diagonal and l off it"
        )
    if not h > l:
        raise NotSymmetric("tracking problems require h > l")
    return SymmetricTrackingProblem(n=n, h=h, l=l,
                                    kappa=problem.kappa, alpha=problem.alpha)


def _perturbed_payoff(problem: DecisionProblem,
                      perturbation: IncentivePerturbation,
                      theta: float) -> DecisionProblem:
    u = np.array(problem.payoff)
    if perturbation.target == "global-high":
        _as_tracking(problem)
        np.fill_diagonal(u, theta * problem.kappa)
    else:
        action, state = perturbation.target
        ia = _action_index(problem, action)
        iw = _state_index(problem, state)
        u[iw, ia] = theta * problem.kappa
    return problem.with_payoff(u)


def _baseline_theta(problem: DecisionProblem,
                    perturbation: IncentivePerturbation) -> float:
    if perturbation.theta is not None:
        return float(perturbation.theta)
    u = np.asarray(problem.payoff)
    if perturbation.target == "global-high":
        return float(u[0, 0]) / problem.kappa
    action, state = perturbation.target
    return float(u[_state_index(problem, state),
                   _action_index(problem, action)]) / problem.kappa


def _certified_or_raise(sol: Solution, what: str) -> Solution:
    if not sol.converged:
        raise MaxIterationsExceeded("%s solve did not converge" % what)
    return sol


def attention_elasticity_fd(problem: DecisionProblem, a, b, omega,
                            perturbation: IncentivePerturbation | None = None,
                            step: float = 1e-4) -> ElasticityReport:
    """Central-difference elasticity of the log posterior odds of a
    versus b in state omega with respect to an incentive parameter.

    Both endpoint problems are re-solved from the baseline solution
    (warm start, tightened tolerances). A change in the optimal support
    between the endpoints means the odds are not differentiable there
    and raises instead of reporting a one-sided slope.
    """
    ia = _action_index(problem, a)
    ib = _action_index(problem, b)
    iw = _state_index(problem, omega)
    if perturbation is None:
        perturbation = IncentivePerturbation.entry(a, omega)
    base = _certified_or_raise(solve(problem, FD_OPTS), "baseline")
    gamma = posterior_odds(base, ia, ib, iw)
    theta0 = _baseline_theta(problem, perturbation)
    dtheta = step * max(1.0, abs(theta0))
    base_support = np.asarray(base.marginal) > 0.0

    log_odds = []
    for sign in (1.0, -1.0):
        moved = _perturbed_payoff(problem, perturbation, theta0 + sign * dtheta)
        sol = _certified_or_raise(
            solve(moved, FD_OPTS, q0=base.barycenter.q, lam0=base.duals.lam),
            "perturbed",
        )
        if not np.array_equal(np.asarray(sol.marginal) > 0.0, base_support):
            raise NonDifferentiablePoint(
                "optimal support changed between the perturbation endpoints"
            )
        log_odds.append(_log_odds(sol, ia, ib, iw))

    eps = (log_odds[0] - log_odds[1]) / (2.0 * dtheta)
    h_star = l_star = None
    try:
        _as_tracking(problem)
    except NotSymmetric:
        pass
    else:
        tilt = np.asarray(base.tilt)
        n = problem.n_states
        h_star = float(np.mean(np.diag(tilt)))
        l_star = float((tilt.sum() - np.trace(tilt)) / (n * (n - 1)))
    return ElasticityReport(gamma_odds=gamma, elasticity=float(eps),
                            method="finite-difference",
                            h_star=h_star, l_star=l_star)


def attention_elasticity_symmetric(problem) -> ElasticityReport:
    """Closed-form elasticity of a symmetric tracking problem under the
    global-high perturbation, evaluated from the solved tilts.

    The solved tilts must satisfy the interior ordering ((alpha-1) times
    the matched tilt strictly between 0 and alpha on one side, the
    mismatched tilt on the other, sides swapping at alpha = 1); a
    violation indicates a corner and raises.
    """
    if isinstance(problem, SymmetricTrackingProblem):
        tracking = problem
    else:
        tracking = _as_tracking(problem)
    dp = tracking.to_decision_problem()
    sol = _certified_or_raise(solve(dp), "symmetric baseline")
    P = np.asarray(sol.experiment.kernel)
    if np.any(P <= 0.0):
        raise BoundarySupport("closed-form elasticity needs an interior kernel")
    n = tracking.n
    tilt = np.asarray(sol.tilt)
    h_star = float(np.mean(np.diag(tilt)))
    l_star = float((tilt.sum() - np.trace(tilt)) / (n * (n - 1)))
    v = float(np.mean(np.diag(P)))
    gamma = (v / (1.0 / n)) * ((1.0 / n) / ((1.0 - v) / (n - 1)))

    alpha = dp.alpha
    if alpha == 1.0:
        return ElasticityReport(gamma_odds=gamma, elasticity=1.0,
                                method="closed-form-symmetric",
                                h_star=h_star, l_star=l_star)

    am1h = (alpha - 1.0) * h_star
    am1l = (alpha - 1.0) * l_star
    tol = 1e-9
    if alpha < 1.0:
        ordered = 0.0 < am1h + tol and am1h < alpha + tol and alpha < am1l + tol
    else:
        ordered = 0.0 < am1l + tol and am1l < alpha + tol and alpha < am1h + tol
    if not ordered:
        raise BoundarySupport(
            "solved tilts violate the interior ordering; the optimum sits "
            "on the boundary"
        )
    A = tilt_function(h_star, alpha) * (1.0 - 1.0 / am1h)
    B = tilt_function(l_star, alpha) * (1.0 - 1.0 / am1l)
    eps = (A / am1l + (n - 1) * B / am1h) / (A + (n - 1) * B)
    return ElasticityReport(gamma_odds=gamma, elasticity=float(eps),
                            method="closed-form-symmetric",
                            h_star=h_star, l_star=l_star)


def ucc_closed_form_binary(v: float, alpha: float) -> float:
    """Minimum cost of accuracy v in the binary symmetric problem."""
    v = float(v)
    if not 0.5 <= v <= 1.0:
        raise OutOfRange("accuracy must lie in [1/2, 1]")
    alpha = float(alpha)
    if alpha == 1.0:
        ent = 0.0
        for p in (v, 1.0 - v):
            if p > 0.0:
                ent += p * math.log(p)
        return ent + math.log(2.0)
    mean_pow = 0.5 * (v ** alpha + (1.0 - v) ** alpha)
    return alpha / (alpha - 1.0) * math.log(2.0 * mean_pow ** (1.0 / alpha))


def ucc_derivative_binary(v: float, alpha: float) -> float:
    """Slope of the binary cost curve in the accuracy; diverges at v=1
    for alpha <= 1 and tends to alpha/(alpha-1) for alpha > 1."""
    v = float(v)
    if not 0.5 <= v < 1.0:
        raise OutOfRange("the slope is defined for v in [1/2, 1)")
    alpha = float(alpha)
    if alpha == 1.0:
        return math.log(v / (1.0 - v))
    num = v ** (alpha - 1.0) - (1.0 - v) ** (alpha - 1.0)
    den = v ** alpha + (1.0 - v) ** alpha
    return alpha / (alpha - 1.0) * num / den


def _first_best_cost(problem: DecisionProblem) -> float:
    """Cost of the deterministic kernel choosing an optimal action in
    every state."""
    P = np.zeros((problem.n_states, problem.n_actions))
    best = np.argmax(np.asarray(problem.payoff), axis=1)
    P[np.arange(problem.n_states), best] = 1.0
    return alpha_mutual_information(P, problem.prior, problem.alpha)


def ucc_general(problem: DecisionProblem, v_grid: Sequence[float],
                n_kappa: int = 800,
                kappa_lo: float | None = None,
                kappa_hi: float | None = None) -> list[CurvePoint]:
    """Trace the utility cost curve of an arbitrary problem.

    Sweeps the cost scale over a geometric grid (warm-starting each
    solve from its neighbor), collects the achieved (utility, cost)
    pairs, pins the exact endpoints at (no-information utility, 0) and
    (first-best utility, first-best cost), and linearly interpolates the
    frontier at the requested utility levels.
    """
    u_min, u_max = utility_bounds(problem)
    spread = u_max - u_min
    if spread <= 0.0:
        return [CurvePoint(float(v), 0.0) for v in v_grid]
    pad = 1e-9 * max(1.0, abs(u_min), abs(u_max))
    v_arr = np.asarray(list(v_grid), dtype=float)
    if np.any(v_arr < u_min - pad) or np.any(v_arr > u_max + pad):
        raise OutOfRange(
            "requested utility levels fall outside [%.12g, %.12g]"
            % (u_min, u_max)
        )
    v_arr = np.clip(v_arr, u_min, u_max)

    if kappa_hi is None:
        kappa_hi = 200.0 * spread
    if kappa_lo is None:
        kappa_lo = spread / 2000.0
    kappas = np.geomspace(kappa_hi, kappa_lo, int(n_kappa))

    if v_arr.size > 1:
        resolution = (v_arr.max() - v_arr.min()) / (v_arr.size - 1)
    else:
        resolution = spread / 100.0

    def achieved(kap, q0, lam0):
        scaled = build_problem(problem.payoff, problem.prior, float(kap),
                               problem.alpha, states=problem.states,
                               actions=problem.actions)
        sol = solve(scaled, q0=q0, lam0=lam0)
        if not sol.converged:
            raise MaxIterationsExceeded(
                "sweep solve at kappa=%.6g did not converge" % kap
            )
        return (expected_utility(problem, sol.experiment), sol.cost_nats,
                sol.barycenter.q, sol.duals.lam)

    sweep = []
    q0 = lam0 = None
    for kap in kappas:
        u, c, q0, lam0 = achieved(kap, q0, lam0)
        sweep.append((float(kap), u, c, q0, lam0))

    # The achieved utility is not uniformly continuous in kappa: for
    # alpha above one the accuracy leaves an interior branch with a
    # square-root approach to the full-information corner (and support
    # switches can jump outright), so a fixed geometric grid can stride
    # over a wide utility band in one step. Bisect such strides in
    # kappa, on a bounded budget, until the frontier is sampled at the
    # resolution of the request; gaps that survive (a genuine
    # discontinuity) are caught by the coarseness check below.
    extra = 2 * int(n_kappa)
    k = 0
    while k + 1 < len(sweep) and extra > 0:
        ka, ua = sweep[k][0], sweep[k][1]
        kb, ub = sweep[k + 1][0], sweep[k + 1][1]
        if abs(ub - ua) > 2.0 * resolution and ka / kb > 1.0 + 1e-9:
            mid = math.sqrt(ka * kb)
            u, c, qn, ln = achieved(mid, sweep[k][3], sweep[k][4])
            sweep.insert(k + 1, (mid, u, c, qn, ln))
            extra -= 1
        else:
            k += 1

    pts_u = [u_min, u_max] + [t[1] for t in sweep]
    pts_i = [0.0, _first_best_cost(problem)] + [t[2] for t in sweep]

    order = np.argsort(pts_u, kind="stable")
    U = np.asarray(pts_u)[order]
    I = np.asarray(pts_i)[order]
    # Collapse numerically identical utility levels to their cheapest cost.
    keep_u = [U[0]]
    keep_i = [I[0]]
    for u, c in zip(U[1:], I[1:]):
        if u - keep_u[-1] <= 1e-13 * max(1.0, abs(u)):
            keep_i[-1] = min(keep_i[-1], c)
        else:
            keep_u.append(u)
            keep_i.append(c)
    U = np.asarray(keep_u)
    I = np.asarray(keep_i)

    gaps = np.diff(U)
    if gaps.size:
        idx = np.searchsorted(U, v_arr, side="right") - 1
        idx = np.clip(idx, 0, gaps.size - 1)
        worst = float(np.max(gaps[idx]))
        if worst > 5.0 * resolution:
            raise GridTooCoarse(
                "frontier sampling leaves a %.3g-wide utility gap; raise "
                "n_kappa or widen the sweep" % worst
            )
    y = np.interp(v_arr, U, I)
    return [CurvePoint(float(v), float(c)) for v, c in zip(v_arr, y)]


def ipc(problem: DecisionProblem, pi_grid: Sequence[float]) -> list[CurvePoint]:
    """Attentional output against payoff scale: for each scale pi, solve
    the problem with payoffs multiplied by pi and evaluate the resulting
    kernel against the ORIGINAL payoffs. Weakly increasing in pi."""
    pis = [float(p) for p in pi_grid]
    if any(not (p > 0.0 and math.isfinite(p)) for p in pis):
        raise OutOfRange("payoff scales must be positive and finite")
    order = np.argsort(pis, kind="stable")
    out: dict[int, CurvePoint] = {}
    q0 = lam0 = None
    for k in order:
        pi = pis[k]
        sol = solve(problem.scaled(pi), q0=q0, lam0=lam0)
        if not sol.converged:
            raise MaxIterationsExceeded(
                "sweep solve at pi=%.6g did not converge" % pi
            )
        q0 = sol.barycenter.q
        lam0 = sol.duals.lam
        out[k] = CurvePoint(pi, expected_utility(problem, sol.experiment))
    return [out[k] for k in range(len(pis))]


def _exclusion_ratios(solution: Solution,
                      problem: DecisionProblem) -> np.ndarray:
    """Per-action value of the support test: the prior-weighted sum of
    tilted (thresholded) weights against its on-support level."""
    alpha = problem.alpha
    mu = np.asarray(problem.prior)
    X = np.asarray(solution.tilt)
    if alpha == 1.0:
        return np.exp(X).T @ mu  # target level is exactly 1
    base = np.maximum((alpha - 1.0) / alpha * X, 0.0)
    with np.errstate(divide="ignore"):
        powed = np.where(base > 0,
                         np.power(np.where(base > 0, base, 1.0),
                                  alpha / (alpha - 1.0)),
                         np.inf if alpha < 1.0 else 0.0)
    # alpha < 1 keeps every tilt strictly inside the domain at a valid
    # solution; an excluded action can still touch the boundary, where
    # the one-sided condition fails by +inf honestly.
    S = powed.T @ mu
    psi = math.exp(-solution.cost_nats)
    return S / psi


def consideration_set(solution: Solution,
                      problem: DecisionProblem) -> ConsiderationReport:
    """Classify actions by support and report the exclusion-test ratio
    for every action (at most 1; equal to 1 exactly on the support)."""
    marg = np.asarray(solution.marginal)
    ratios = _exclusion_ratios(solution, problem)
    support = tuple(a for a, m in zip(problem.actions, marg) if m > 0.0)
    ratio_map = {a: float(r) for a, r in zip(problem.actions, ratios)}
    slack = {
        a: float(1.0 - r)
        for a, r, m in zip(problem.actions, ratios, marg)
        if m <= 0.0
    }
    return ConsiderationReport(support=support, ratios=ratio_map, slack=slack)


def certainty_events(solution: Solution,
                     problem: DecisionProblem) -> CertaintyReport:
    """Scan posteriors for states ruled out with (numerical) certainty.

    Reports the deduplicated supports of posteriors that exclude at
    least one state, and whether every posterior is a point mass.
    """
    events: list[tuple[str, ...]] = []
    seen = set()
    point_masses = 0
    n_posteriors = 0
    for post in solution.posteriors:
        n_posteriors += 1
        gamma = np.asarray(post.gamma)
        inside = gamma >= CERTAINTY_TOL
        if inside.all():
            continue
        ev = tuple(s for s, k in zip(problem.states, inside) if k)
        if int(inside.sum()) == 1:
            point_masses += 1
        if ev not in seen:
            seen.add(ev)
            events.append(ev)
    fully = n_posteriors > 0 and point_masses == n_posteriors
    return CertaintyReport(certain_events=tuple(events),
                           fully_informative=fully)
