"""Alternating-minimization solver for information-cost decision problems.

The algorithm alternates three steps until the barycenter stops moving:
solve the per-state dual variables by safeguarded Newton root-finding on
primal feasibility, rebuild the conditional kernel from the tilted
barycenter, and recompute the barycenter of the new kernel. All kernel
arithmetic runs in the log domain so that orders near 1 (where the tilt
exponent 1/(alpha-1) blows up) stay stable.

Every solve returns a certificate of first-order optimality recomputed
from the returned kernel and duals through formulas independent of the
iteration itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AlphaIsOne, DualBoundViolation, NewtonDiverged
from .infomeasures import alpha_mutual_information, barycenter as _barycenter_of
from .problem import DecisionProblem, Experiment, Posterior, _frozen


def logsumexp(a, axis=None, keepdims=False):
    """Stable log of summed exponentials over one axis.

    Local implementation: the iteration calls this tens of thousands of
    times on small arrays, where the generic library version spends most
    of its time in dispatch and validation. Slices that are entirely
    -inf (dead signals carry log-zero entries) come out as -inf.
    """
    a = np.asarray(a, dtype=float)
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True))
    out = out + amax
    if not keepdims:
        out = np.squeeze(out, axis=axis)
    return out if out.ndim else float(out)

#: Residual level below which a solution counts as certified.
CERT_TOL = 1e-8

#: Tolerated negativity on recovered positivity multipliers.
DELTA_TOL = 1e-10

#: Barycenter weights below this after convergence are treated as
#: stalled decay toward zero and zeroed in the final consistency pass.
_DEAD_ZONE = 1e-8

#: A live signal whose barycenter mass still shrinks by more than this
#: per iteration when the stopping criteria fire is a stalled geometric
#: decay, not a converged weight, and is zeroed instead of kept.
_GROWTH_TOL = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and caps for :func:`solve` and :func:`solve_duals`.

    tol_q bounds the max-norm change of the barycenter between
    iterations, tol_obj the change of the net objective; both must hold
    to stop. Signals whose barycenter mass drops below prune_threshold
    are zeroed exactly and never revived.
    """

    tol_q: float = 1e-10
    tol_obj: float = 1e-12
    max_iters: int = 10000
    newton_tol: float = 1e-12
    newton_max_iters: int = 100
    prune_threshold: float = 1e-12

    def __post_init__(self):
        for name in ("tol_q", "tol_obj", "newton_tol", "prune_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)
        for name in ("max_iters", "newton_max_iters"):
            if not getattr(self, name) >= 1:
                raise ValueError("%s must be at least 1" % name)


@dataclass(frozen=True, eq=False)
class DualVariables:
    """Per-state duals of the primal feasibility (row-sum) constraints.

    In bounds they satisfy lam > mu * max_a u/kappa per state when
    alpha < 1 and lam < the same bound when alpha > 1.
    """

    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _frozen(self.lam))


class IterationRecord(NamedTuple):
    """One row of the structured iteration log."""

    iteration: int
    objective: float
    q_distance: float
    newton_iterations: int


@dataclass(frozen=True, eq=False)
class KktCertificate:
    """First-order optimality residuals of a returned solution.

    delta holds the positivity multipliers recovered from the
    stationarity defect (scaled by the prior); psi is exp(-cost) and
    psi_residual the worst deviation of the per-signal optimality sums
    from their target (psi on supported signals for alpha != 1, exactly
    1 in the Shannon case), including the one-sided bound on dropped
    signals.
    """

    stationarity_residual: float
    primal_residual: float
    delta: np.ndarray
    complementarity_residual: float
    psi: float
    psi_residual: float

    def __post_init__(self):
        object.__setattr__(self, "delta", _frozen(self.delta))

    def within(self, tol: float = CERT_TOL) -> bool:
        """True when every residual is at most tol and the recovered
        multipliers are non-negative up to rounding."""
        return (
            self.stationarity_residual <= tol
            and self.primal_residual <= tol
            and self.complementarity_residual <= tol
            and self.psi_residual <= tol
            and float(self.delta.min(initial=0.0)) >= -DELTA_TOL
        )


@dataclass(frozen=True, eq=False)
class Solution:
    """Converged output of :func:`solve`.

    experiment, barycenter and duals are mutually consistent: the kernel
    is rebuilt from the final barycenter and duals, the reported
    barycenter is the barycenter of that kernel, and the certificate is
    computed from the kernel and duals alone.
    """

    problem: DecisionProblem
    experiment: Experiment
    barycenter: "object"
    duals: DualVariables
    marginal: np.ndarray
    posteriors: tuple[Posterior, ...]
    objective_net_utility: float
    cost_nats: float
    iterations: int
    certificate: KktCertificate
    tilt: np.ndarray
    converged: bool
    history: tuple[IterationRecord, ...] = field(repr=False, default=())

    def __post_init__(self):
        object.__setattr__(self, "marginal", _frozen(self.marginal))
        object.__setattr__(self, "tilt", _frozen(self.tilt))

    @property
    def certified(self) -> bool:
        """Converged and all certificate residuals at most 1e-8."""
        return self.converged and self.certificate.within(CERT_TOL)

    @property
    def support(self) -> tuple[str, ...]:
        """Actions taken with positive unconditional probability."""
        return tuple(
            a for a, w in zip(self.problem.actions, self.marginal) if w > 0.0
        )


def tilt_function(x, alpha: float):
    """The map from tilts to kernel weights, ((alpha-1)x/alpha)^(1/(alpha-1)).

    Arguments with (alpha-1)x <= 0 fall outside the natural domain: the
    thresholded value 0 is returned for alpha > 1 and +inf (the limit
    from inside the domain) for alpha < 1, which signals a dual bound
    violation. The ratio f'(x)/f(x) equals 1/((alpha-1)x). Shannon
    callers must use exp(x) instead.
    """
    alpha = float(alpha)
    if alpha == 1.0:
        raise AlphaIsOne("use exp(x) for the Shannon tilt")
    x = np.asarray(x, dtype=float)
    base = (alpha - 1.0) / alpha * x
    pos = base > 0
    fill = 0.0 if alpha > 1.0 else np.inf
    out = np.where(pos, np.power(np.where(pos, base, 1.0), 1.0 / (alpha - 1.0)), fill)
    return float(out) if out.ndim == 0 else out


def _masked_log(a: np.ndarray) -> np.ndarray:
    pos = a > 0
    return np.where(pos, np.log(np.where(pos, a, 1.0)), -np.inf)


def _log_tilt(X: np.ndarray, alpha: float) -> np.ndarray:
    """log of the (thresholded) tilt weights; +inf encodes out-of-bounds
    duals when alpha < 1."""
    if alpha == 1.0:
        return X
    base = (alpha - 1.0) / alpha * X
    return _masked_log(base) / (alpha - 1.0)


def _log_tilt_prime(X: np.ndarray, alpha: float) -> np.ndarray:
    """log of the tilt derivative; thresholded arguments contribute -inf
    (zero derivative)."""
    if alpha == 1.0:
        return X
    base = (alpha - 1.0) / alpha * X
    pos = base > 0
    logb = np.where(pos, np.log(np.where(pos, base, 1.0)), 0.0)
    expo = (2.0 - alpha) / (alpha - 1.0)
    return np.where(pos, expo * logb - math.log(alpha), -np.inf)


class _Workspace:
    """Immutable per-problem arrays shared by the dual solves."""

    def __init__(self, problem: DecisionProblem):
        self.problem = problem
        self.alpha = problem.alpha
        self.kappa = problem.kappa
        self.mu = np.asarray(problem.prior)
        self.logmu = np.log(self.mu)
        self.Ukap = np.asarray(problem.payoff) / problem.kappa
        # Duals live strictly above the bound for alpha < 1, below for
        # alpha > 1; sgn points from the bound into the feasible side.
        self.sgn = 1.0 if self.alpha < 1.0 else -1.0


def _live_bounds(ws: _Workspace, logq: np.ndarray) -> np.ndarray:
    """Feasibility bound on the duals, one per state, taken over the
    signals with positive barycenter mass. Dead columns do not
    constrain the duals, and using their payoffs would shrink the
    reachable range of the per-state sums below the root."""
    live = logq > -np.inf
    U = np.where(live[None, :], ws.Ukap, -np.inf)
    return ws.mu * U.max(axis=1)


class _DualState(NamedTuple):
    lam: np.ndarray
    X: np.ndarray
    logF: np.ndarray
    logg: np.ndarray
    logh: np.ndarray
    logD: float


def _dual_state(ws: _Workspace, logq: np.ndarray, lam: np.ndarray) -> _DualState:
    X = ws.Ukap - (lam / ws.mu)[:, None]
    logF = _log_tilt(X, ws.alpha)
    with np.errstate(invalid="ignore"):
        Z = logq[None, :] + logF
    if ws.alpha < 1.0:
        # q = 0 forces the entry to 0 even where the tilt diverges.
        Z = np.where(np.isnan(Z), -np.inf, Z)
    logg = logsumexp(Z, axis=1)
    if ws.alpha == 1.0:
        logh = logg
    else:
        with np.errstate(invalid="ignore"):
            Zh = logq[None, :] + ws.alpha * logF
        if ws.alpha < 1.0:
            Zh = np.where(np.isnan(Zh), -np.inf, Zh)
        logh = logsumexp(Zh, axis=1)
    logD = float(logsumexp(ws.logmu + logh))
    return _DualState(lam, X, logF, logg, logh, logD)


def _residual_of(st: _DualState) -> np.ndarray:
    if st.logD == -np.inf:
        return -np.ones_like(st.lam)
    with np.errstate(invalid="ignore"):
        return np.expm1(st.logg - st.logD)


def _jacobian_of(ws: _Workspace, logq: np.ndarray, st: _DualState) -> np.ndarray:
    rho = np.exp(st.logg - st.logD)
    J = np.outer(rho, rho)
    logfp = _log_tilt_prime(st.X, ws.alpha)
    with np.errstate(invalid="ignore"):
        Z = logq[None, :] + logfp
    if ws.alpha < 1.0:
        Z = np.where(np.isnan(Z), -np.inf, Z)
    logS = logsumexp(Z, axis=1)
    diag = np.exp(logS - ws.logmu - st.logD)
    J[np.diag_indices_from(J)] -= diag
    return J


def _in_bounds(ws: _Workspace, lam: np.ndarray,
               bound: np.ndarray) -> bool:
    if ws.alpha == 1.0:
        return True
    return bool(np.all(ws.sgn * (lam - bound) > 0))


def _bisect_inner(ws: _Workspace, logq: np.ndarray, ell: float,
                  bound: np.ndarray):
    """Solve logg_w(lam_w) = ell per state for lam = bound + sgn*mu*e^t.

    logg is monotone in t (decreasing for alpha < 1, increasing for
    alpha > 1), so a vectorized bisection over t converges
    unconditionally.
    """
    n = ws.mu.size
    lo = np.full(n, -30.0)
    hi = np.full(n, 30.0)
    increasing = ws.alpha > 1.0

    def logg_at(t):
        lam = bound + ws.sgn * ws.mu * np.exp(t)
        return _dual_state(ws, logq, lam).logg

    for _ in range(40):
        g_lo = logg_at(lo)
        g_hi = logg_at(hi)
        if increasing:
            need_lo = g_lo > ell
            need_hi = g_hi < ell
        else:
            need_lo = g_lo < ell
            need_hi = g_hi > ell
        if not (need_lo.any() or need_hi.any()):
            break
        lo = np.where(need_lo, np.maximum(lo - 25.0, -700.0), lo)
        hi = np.where(need_hi, np.minimum(hi + 25.0, 700.0), hi)
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        g_mid = logg_at(mid)
        go_up = (g_mid < ell) if increasing else (g_mid > ell)
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    t = 0.5 * (lo + hi)
    lam = bound + ws.sgn * ws.mu * np.exp(t)
    return lam, _dual_state(ws, logq, lam)


def _bisect_duals(ws: _Workspace, logq: np.ndarray, ell0: float,
                  bound: np.ndarray):
    """Nested-bisection fallback: outer bisection on the log common
    denominator, inner per-state bisection on the duals."""

    def phi(ell):
        lam, st = _bisect_inner(ws, logq, ell, bound)
        return float(logsumexp(ws.logmu + st.logh)) - ell, lam, st

    # Sign pattern of phi: negative near ell -> -inf and positive near
    # +inf when alpha > 1, mirrored when alpha < 1.
    low_sign = -1.0 if ws.alpha > 1.0 else 1.0
    lo, hi = ell0 - 1.0, ell0 + 1.0
    step = 2.0
    for _ in range(80):
        val, _, _ = phi(lo)
        if val * low_sign > 0:
            break
        lo -= step
        step *= 2.0
    step = 2.0
    for _ in range(80):
        val, _, _ = phi(hi)
        if val * low_sign < 0:
            break
        hi += step
        step *= 2.0
    lam, st = None, None
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        val, lam, st = phi(mid)
        if val * low_sign > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return lam, st


def _solve_duals_impl(ws: _Workspace, logq: np.ndarray,
                      opts: SolverOptions, lam0=None):
    """Returns (lam, newton_iterations, terminal dual state)."""
    if ws.alpha == 1.0:
        lam = ws.mu * logsumexp(logq[None, :] + ws.Ukap, axis=1)
        return lam, 0, _dual_state(ws, logq, lam)

    bound = _live_bounds(ws, logq)
    lam = None
    if lam0 is not None:
        lam0 = np.asarray(lam0, dtype=float)
        if _in_bounds(ws, lam0, bound):
            lam = lam0.copy()
    if lam is None:
        lam = bound + ws.sgn * ws.mu

    st = _dual_state(ws, logq, lam)
    R = _residual_of(st)
    best = float(np.max(np.abs(R)))
    used = 0
    fell_back = False
    for it in range(opts.newton_max_iters):
        if best <= opts.newton_tol:
            return lam, used, st
        J = _jacobian_of(ws, logq, st)
        try:
            step = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError:
            fell_back = True
            break
        if not np.all(np.isfinite(step)):
            fell_back = True
            break
        t = 1.0
        accepted = False
        for _ in range(10):
            cand = lam + t * step
            if _in_bounds(ws, cand, bound):
                st_c = _dual_state(ws, logq, cand)
                R_c = _residual_of(st_c)
                m_c = float(np.max(np.abs(R_c)))
                if np.isfinite(m_c) and m_c < best:
                    lam, st, R, best = cand, st_c, R_c, m_c
                    accepted = True
                    break
            t *= 0.5
        used = it + 1
        if not accepted:
            fell_back = True
            break
    else:
        fell_back = True

    if fell_back:
        ell0 = st.logD if np.isfinite(st.logD) else 0.0
        lam, st = _bisect_duals(ws, logq, ell0, bound)
        best = float(np.max(np.abs(_residual_of(st))))
    if best > opts.newton_tol:
        raise NewtonDiverged(
            "dual residual %.3e above tolerance %.3e after Newton and "
            "bisection" % (best, opts.newton_tol)
        )
    return lam, used, st


def _q_of(q_prev) -> np.ndarray:
    q = getattr(q_prev, "q", q_prev)
    return np.asarray(q, dtype=float)


def _lam_of(duals) -> np.ndarray:
    lam = getattr(duals, "lam", duals)
    return np.asarray(lam, dtype=float)


def _log_kernel(ws: _Workspace, logq: np.ndarray, st: _DualState) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        logP = logq[None, :] + st.logF - st.logD
    return np.where(np.isnan(logP), -np.inf, logP)


def dual_residual(lam, q_prev, problem: DecisionProblem) -> np.ndarray:
    """Per-state row-sum defect of the kernel implied by candidate duals:
    sum_s P_lam(s|w) - 1. Zero at the solved duals; tends to -1 as a
    dual approaches its bound and the whole row's tilts vanish."""
    ws = _Workspace(problem)
    logq = _masked_log(_q_of(q_prev))
    st = _dual_state(ws, logq, _lam_of(lam))
    return _residual_of(st)


def dual_jacobian(lam, q_prev, problem: DecisionProblem) -> np.ndarray:
    """Closed-form Jacobian of :func:`dual_residual` in the duals.

    Off-diagonal entries are products of the two row sums; the diagonal
    subtracts the derivative term with exponent (2-alpha)/(alpha-1),
    with thresholded entries contributing zero.
    """
    ws = _Workspace(problem)
    logq = _masked_log(_q_of(q_prev))
    st = _dual_state(ws, logq, _lam_of(lam))
    return _jacobian_of(ws, logq, st)


def solve_duals(q_prev, problem: DecisionProblem,
                opts: SolverOptions | None = None, lam0=None) -> DualVariables:
    """Find the duals making the implied kernel row-stochastic.

    Shannon problems use the closed form lam_w = mu(w) log sum_s
    q(s) exp(u(s,w)/kappa). Otherwise a bound-respecting Newton
    iteration runs with step halving, falling back to a nested bisection
    that is monotone in both levels and cannot overshoot.
    """
    opts = opts or SolverOptions()
    ws = _Workspace(problem)
    logq = _masked_log(_q_of(q_prev))
    lam, _, _ = _solve_duals_impl(ws, logq, opts, lam0=lam0)
    return DualVariables(lam)


def update_experiment(q_prev, duals, problem: DecisionProblem) -> Experiment:
    """Rebuild the kernel from a barycenter and duals.

    For alpha != 1 each entry is the thresholded tilt times the
    barycenter weight over the common denominator; rows sum to 1 exactly
    when the duals solve primal feasibility. For alpha = 1 the update is
    the exponential-tilt row normalization, and signals with zero
    barycenter weight stay at zero in every row.
    """
    ws = _Workspace(problem)
    q = _q_of(q_prev)
    logq = _masked_log(q)
    if ws.alpha == 1.0:
        logP = logq[None, :] + ws.Ukap
        logP = logP - logsumexp(logP, axis=1, keepdims=True)
        return Experiment(np.exp(logP))
    st = _dual_state(ws, logq, _lam_of(duals))
    if ws.alpha < 1.0:
        live = logq > -np.inf
        if np.any(np.isposinf(st.logF) & live[None, :]):
            raise DualBoundViolation(
                "a dual variable sits at or below its lower bound"
            )
    dead = st.logg == -np.inf
    if np.any(dead):
        raise DualBoundViolation(
            "duals leave states with an all-zero kernel row: %s"
            % ", ".join(problem.states[i] for i in np.nonzero(dead)[0])
        )
    return Experiment(np.exp(_log_kernel(ws, logq, st)))


def _shannon_cost(mu: np.ndarray, P: np.ndarray, logP: np.ndarray) -> float:
    q = mu @ P
    logq = _masked_log(q)
    with np.errstate(invalid="ignore"):
        contrib = np.where(logP > -np.inf, P * (logP - logq[None, :]), 0.0)
    val = float(np.sum(mu[:, None] * contrib))
    return val if val > 0.0 else 0.0


def _certificate_full(problem: DecisionProblem, P: np.ndarray,
                      lam: np.ndarray):
    """Recompute all first-order residuals from the kernel and duals.

    Uses the power-sum form of the cost gradient (not the solver's tilt
    recursion) so agreement is evidence and not bookkeeping. Returns the
    certificate together with the per-signal exclusion slack
    ``Ssig - target``; a positive slack on an unused signal means that
    signal could profitably re-enter the support.
    """
    alpha = problem.alpha
    mu = np.asarray(problem.prior)
    X = np.asarray(problem.payoff) / problem.kappa - (lam / mu)[:, None]
    marg = mu @ P
    supported = marg > 0.0
    pos = P > 0.0
    primal = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    logP = _masked_log(P)
    logmu = np.log(mu)

    if alpha == 1.0:
        q = marg / marg.sum()
        logq = _masked_log(q)
        with np.errstate(invalid="ignore"):
            grad = logP - logq[None, :]
        grad = np.where(np.isnan(grad), 0.0, grad)
        cost = _shannon_cost(mu, P, logP)
        # Per-signal sums compare to exactly 1 in the Shannon case.
        Ssig = np.exp(logsumexp(logmu[:, None] + X, axis=0))
        target = 1.0
    else:
        T = mu @ np.where(pos, np.power(P, alpha), 0.0)
        logT = _masked_log(T)
        logC = float(logsumexp(logT / alpha))
        sign = 1.0 if alpha > 1.0 else -1.0
        with np.errstate(invalid="ignore"):
            logmag = (
                math.log(alpha / abs(alpha - 1.0))
                - logC
                + (1.0 - alpha) / alpha * logT[None, :]
                + (alpha - 1.0) * logP
            )
        grad = sign * np.exp(np.where(pos, logmag, -np.inf))
        cost = alpha / (alpha - 1.0) * logC
        cost = cost if cost > 0.0 else 0.0
        base = (alpha - 1.0) / alpha * X
        logbase = _masked_log(base)
        with np.errstate(invalid="ignore"):
            logterm = logmu[:, None] + alpha / (alpha - 1.0) * logbase
        logterm = np.where(np.isnan(logterm), -np.inf, logterm)
        Ssig = np.exp(logsumexp(logterm, axis=0))
        target = math.exp(-cost)

    G = np.zeros_like(P)
    on_support_cols = np.broadcast_to(supported[None, :], P.shape)
    interior = pos & on_support_cols
    corner = (~pos) & on_support_cols
    G[interior] = (grad - X)[interior]
    G[corner] = (-X)[corner]
    delta = mu[:, None] * G

    stationarity = float(np.max(np.abs(G[interior]), initial=0.0))
    complementarity = float(np.max(np.abs(P * delta), initial=0.0))
    psi = math.exp(-cost)

    dev_sup = float(np.max(np.abs(Ssig[supported] - target), initial=0.0))
    dev_off = float(np.max(Ssig[~supported] - target, initial=0.0))
    psi_residual = max(dev_sup, max(dev_off, 0.0))

    cert = KktCertificate(
        stationarity_residual=stationarity,
        primal_residual=primal,
        delta=delta,
        complementarity_residual=complementarity,
        psi=psi,
        psi_residual=psi_residual,
    )
    return cert, Ssig - target


def _certificate(problem: DecisionProblem, P: np.ndarray,
                 lam: np.ndarray) -> KktCertificate:
    return _certificate_full(problem, P, lam)[0]


def certify(solution: Solution, problem: DecisionProblem) -> KktCertificate:
    """Recompute the optimality certificate of a solution from scratch."""
    return _certificate(
        problem, np.asarray(solution.experiment.kernel),
        _lam_of(solution.duals),
    )


def _extrapolate(q0: np.ndarray, q1: np.ndarray,
                 q2: np.ndarray) -> np.ndarray | None:
    """Squared-extrapolation candidate from three consecutive barycenter
    iterates. The alternating update contracts linearly, and near the
    optimum its ratio can sit close to one; the classic squared step
    (Aitken along the dominant error mode, with the step length from the
    ratio of difference norms) jumps down the geometric tail in one
    move. Returns None when the window gives no usable step; the caller
    is responsible for safeguarding the candidate against the objective.
    """
    r = q1 - q0
    v = (q2 - q1) - r
    nr = float(np.linalg.norm(r))
    nv = float(np.linalg.norm(v))
    if nr <= 0.0 or nv <= 0.0:
        return None
    s = -nr / nv
    if s > -1.0:
        # A step of exactly -1 reproduces q2; shorter steps are behind
        # the plain iteration.
        s = -1.0
    elif s < -1e4:
        s = -1e4
    cand = q0 - 2.0 * s * r + (s * s) * v
    # The affine step length fits the slowest error mode; applied to a
    # signal in geometric decay with a faster ratio it overshoots
    # upward (the squared form turns the mismatch into growth). Jump
    # those coordinates down their own geometric trajectory over the
    # same effective horizon instead.
    decay = (q2 > 0.0) & (q2 < q1) & (q1 < q0)
    if np.any(decay):
        with np.errstate(divide="ignore"):
            lr = np.log(q2[decay] / q1[decay])
        lc = np.log(q2[decay]) + (-s) * lr
        cand[decay] = np.where(lc > -700.0, np.exp(lc), 0.0)
    cand = np.maximum(cand, 0.0)
    tot = float(cand.sum())
    if not np.isfinite(tot) or tot <= 0.0:
        return None
    cand = cand / tot
    if float(np.max(np.abs(cand - q2))) <= 1e-15:
        return None
    return cand


def solve(problem: DecisionProblem, opts: SolverOptions | None = None,
          q0=None, lam0=None) -> Solution:
    """Run the alternating solver to a certified solution.

    Starts from the uniform barycenter (or q0), iterates dual solve /
    kernel update / barycenter update, prunes signals whose mass falls
    below the prune threshold, and stops when both the barycenter change
    and the objective change are within tolerance. Support edits are
    checked after the fact: a signal zeroed in error is flagged by the
    exclusion part of the certificate and revived before the result is
    accepted. Hitting the iteration cap returns the last iterate flagged
    as not converged instead of raising.
    """
    opts = opts or SolverOptions()
    ws = _Workspace(problem)
    n, m = problem.n_states, problem.n_actions
    mu = ws.mu
    payoff = np.asarray(problem.payoff)
    alpha = ws.alpha

    if q0 is None:
        q = np.full(m, 1.0 / m)
    else:
        q = np.array(_q_of(q0), dtype=float)
        q = q / q.sum()
    logq = _masked_log(q)
    lam = np.asarray(lam0, dtype=float) if lam0 is not None else None

    history: list[IterationRecord] = []
    tail = {"obj": None}
    # Signals brought back by the repair loop below. The certificate has
    # ruled they belong in the support, so the in-loop support cuts must
    # leave them alone or the same wrong drop just repeats.
    protected = np.zeros(m, dtype=bool)

    def run_phase(tol_q: float, tol_obj: float, cap: int) -> bool:
        nonlocal q, logq, lam
        obj_prev = tail["obj"]
        done = False
        # Extrapolation bookkeeping: q_back holds the two most recent
        # pre-step barycenters, checkpoint the state to restore when a
        # trial step fails its objective safeguard.
        q_back: list[np.ndarray] = []
        checkpoint = None
        trial = False
        for _ in range(cap):
            it = len(history) + 1
            lam, nit, st = _solve_duals_impl(ws, logq, opts, lam0=lam)
            logP = _log_kernel(ws, logq, st)
            P = np.exp(logP)
            util = float(np.sum(mu[:, None] * P * payoff))
            if alpha == 1.0:
                cost = _shannon_cost(mu, P, logP)
                q_new = mu @ P
                q_new = q_new / q_new.sum()
            else:
                logT = logsumexp(ws.logmu[:, None] + alpha * logP,
                                 axis=0)
                logC = float(logsumexp(logT / alpha))
                cost = alpha / (alpha - 1.0) * logC
                cost = cost if cost > 0.0 else 0.0
                q_new = np.exp(logT / alpha - logC)
                q_new = q_new / q_new.sum()
            obj = problem.kappa * cost - util

            if trial:
                # The previous barycenter was an extrapolated shot, not
                # a plain update; keep its outcome only if it did not
                # push the objective up. A rejected shot is unwound
                # completely (including its would-be history row) so the
                # recorded trajectory stays the accepted one.
                trial = False
                cq, clogq, clam, cobj = checkpoint
                checkpoint = None
                if obj > cobj + 1e-12 * max(1.0, abs(cobj)):
                    q, logq, lam = cq, clogq, clam
                    obj_prev = cobj
                    q_back = []
                    continue

            small = (q_new > 0.0) & (q_new < opts.prune_threshold) \
                & ~protected
            if np.any(small):
                q_new = np.where(small, 0.0, q_new)
                q_new = q_new / q_new.sum()

            dq = float(np.max(np.abs(q_new - q)))
            dobj = abs(obj - obj_prev) if obj_prev is not None \
                else np.inf
            history.append(IterationRecord(it, obj, dq, nit))
            obj_prev = obj

            if dq <= tol_q and dobj <= tol_obj:
                # Candidate stop. A signal still shedding mass at a
                # geometric rate above the certificate scale is not
                # converged, only slow (its absolute step is small
                # because its mass is); zero it and keep iterating
                # rather than stopping on a stalled decay.
                live = q > 0.0
                ratio = np.ones_like(q_new)
                ratio[live] = q_new[live] / q[live]
                # Which shrinking signals are actually dead? The decay
                # test alone misfires on near-ties (signals sitting at
                # the exclusion boundary shrink through long metastable
                # transients, and killing one costs a revival plus a
                # full re-descent later), so a kill also needs the
                # per-signal exclusion test to call the signal
                # unprofitable by a decisive margin. Decisively
                # unprofitable signals are retired even while their
                # decay is slow, which keeps one support wave from
                # setting off the next.
                excl = _certificate_full(problem, P, lam)[1]
                shrinking = live & (q_new > 0.0) & ~protected \
                    & (ratio < 1.0 - _GROWTH_TOL)
                dying = (shrinking & (excl < -1e-7)) \
                    | (live & (q_new > 0.0) & ~protected
                       & (excl < -1e-6))
                q = q_new
                if np.any(dying):
                    q = np.where(dying, 0.0, q)
                    q = q / q.sum()
                    logq = _masked_log(q)
                    q_back = []
                    continue
                logq = _masked_log(q)
                done = True
                break

            q_edited = q_new.shape == q.shape and (
                np.count_nonzero(q_new) != np.count_nonzero(q))
            q_back.append(q)
            q = q_new
            logq = _masked_log(q)
            if q_edited:
                # Support changed; the last steps are not iterates of a
                # smooth map, so restart the extrapolation window.
                q_back = []
            elif len(q_back) == 2:
                q_acc = _extrapolate(q_back[0], q_back[1], q)
                q_back = []
                if q_acc is not None and not np.any(
                        protected & (q_acc == 0.0) & (q > 0.0)):
                    checkpoint = (q, logq, lam, obj)
                    trial = True
                    q = q_acc
                    logq = _masked_log(q)
        tail["obj"] = obj_prev
        return done

    converged = run_phase(opts.tol_q, opts.tol_obj, opts.max_iters)

    def consistency():
        # Re-solve the duals at the final barycenter and report the
        # kernel, barycenter, and certificate of one coherent triple.
        # Residual epsilon columns (decays the stopping rule cut short)
        # are zeroed here; the certificate is recomputed from scratch
        # afterwards, so a wrongly dropped signal still surfaces as a
        # failed certificate.
        nonlocal q, logq, lam
        while True:
            lam, _, st = _solve_duals_impl(ws, logq, opts, lam0=lam)
            logP = _log_kernel(ws, logq, st)
            P = np.exp(logP)
            dying = (q > 0.0) & (q < _DEAD_ZONE)
            if not np.any(dying):
                cert, excess = _certificate_full(problem, P, lam)
                return st, P, cert, excess
            q = np.where(dying, 0.0, q)
            q = q / q.sum()
            logq = _masked_log(q)

    st, P, certificate, excess = consistency()

    # Certificate repair, on a bounded budget. Two distinct failure
    # modes land here. A signal that was dropped during a transient
    # (pruning and stall cuts act on the current iterate, and zero mass
    # is absorbing under the multiplicative update) shows up as a dead
    # signal with positive exclusion slack; reseeding it with a little
    # mass lets the iteration pull it back to its true weight, since
    # positive slack is exactly a growth factor above one. Otherwise a
    # geometric convergence tail has left residuals or multipliers just
    # outside the certificate bounds, and a short run at tighter
    # tolerances finishes the job.
    rounds = 0
    while converged and rounds < 6 and not certificate.within(CERT_TOL):
        locked_out = (q == 0.0) & (excess > CERT_TOL)
        if np.any(locked_out):
            protected |= locked_out
            q = np.where(locked_out, 1e-3, q)
            q = q / q.sum()
            logq = _masked_log(q)
            converged = run_phase(opts.tol_q, opts.tol_obj, opts.max_iters)
        else:
            run_phase(1e-13, 1e-16, 500)
        st, P, certificate, excess = consistency()
        rounds += 1

    bc = _barycenter_of(P, mu, alpha)
    marg = mu @ P
    cost = alpha_mutual_information(P, mu, alpha)
    util = float(np.sum(mu[:, None] * P * payoff))
    certificate = _certificate(problem, P, lam)
    posteriors = tuple(
        Posterior(
            signal=problem.actions[j],
            gamma=mu * P[:, j] / marg[j],
            weight=float(marg[j]),
        )
        for j in range(m)
        if marg[j] > 0.0
    )
    return Solution(
        problem=problem,
        experiment=Experiment(P),
        barycenter=bc,
        duals=DualVariables(lam),
        marginal=marg,
        posteriors=posteriors,
        objective_net_utility=util - problem.kappa * cost,
        cost_nats=cost,
        iterations=len(history),
        certificate=certificate,
        tilt=st.X,
        converged=converged,
        history=tuple(history),
    )
