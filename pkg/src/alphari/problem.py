"""Decision-problem domain types, validation, and problem-file ingestion.

Conventions used throughout the package:

- The payoff matrix is indexed ``[state][action]`` and measured in utils.
- Signals are identified with actions, so a kernel ``P[i, j]`` is the
  probability of signal/action ``j`` conditional on state ``i`` and every
  kernel has exactly as many columns as the problem has actions.
- Information costs are in nats; ``kappa`` (utils per nat) is the sole
  conversion factor between the two scales.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonPositiveAlpha,
    NonPositiveKappa,
    NonStochasticPrior,
)

#: Tolerance for probability vectors summing to one.
PROB_TOL = 1e-12

#: |alpha - 1| at or below this is treated as exactly 1 (Shannon branch),
#: because the 1/(alpha - 1) factors amplify rounding error without bound.
SHANNON_SNAP = 1e-6

_PROBLEM_KEYS = {"states", "actions", "payoff", "prior", "kappa", "alpha"}


def _frozen(a: Any, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """A static decision problem with costly information acquisition.

    Fields: ordered state labels, ordered action labels, payoff matrix
    u(a, w) indexed [state][action], prior over states, cost scale kappa
    and cost curvature alpha. Instances are immutable; build them through
    :func:`build_problem` or :func:`validate_problem` so the invariants
    (stochastic prior, positive kappa/alpha, finite payoffs, zero-prior
    states dropped) are enforced.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    payoff: np.ndarray
    prior: np.ndarray
    kappa: float
    alpha: float

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def is_shannon(self) -> bool:
        """True when alpha was snapped to exactly 1."""
        return self.alpha == 1.0

    def with_payoff(self, payoff: np.ndarray) -> "DecisionProblem":
        """Copy of this problem with a replaced payoff matrix."""
        return build_problem(
            payoff, self.prior, self.kappa, self.alpha,
            states=self.states, actions=self.actions,
        )

    def scaled(self, pi: float) -> "DecisionProblem":
        """Copy with every payoff multiplied by ``pi``."""
        return self.with_payoff(np.asarray(self.payoff) * float(pi))


@dataclass(frozen=True, eq=False)
class Experiment:
    """A conditional signal kernel P(s|w) indexed [state][signal].

    The plain constructor only checks structure (2-D, finite, non-negative)
    because intermediate kernels produced while probing dual variables do
    not have unit row sums; use :meth:`validated` for kernels that must be
    row-stochastic to within 1e-12.
    """

    kernel: np.ndarray

    def __post_init__(self):
        k = _frozen(self.kernel)
        if k.ndim != 2:
            raise DimensionMismatch("experiment kernel must be a 2-D matrix")
        if not np.all(np.isfinite(k)):
            raise DimensionMismatch("experiment kernel entries must be finite")
        if np.any(k < 0):
            raise DimensionMismatch("experiment kernel entries must be non-negative")
        object.__setattr__(self, "kernel", k)

    @classmethod
    def validated(cls, kernel) -> "Experiment":
        """Construct and require every row to sum to 1 within 1e-12 and
        every entry to lie in [0, 1]."""
        exp = cls(np.asarray(kernel, dtype=float))
        k = exp.kernel
        if np.any(k > 1.0 + PROB_TOL):
            raise DimensionMismatch("experiment kernel entries must lie in [0, 1]")
        rows = k.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > PROB_TOL):
            raise DimensionMismatch(
                "experiment kernel rows must sum to 1 within %.0e" % PROB_TOL
            )
        return exp

    @property
    def n_signals(self) -> int:
        return self.kernel.shape[1]


@dataclass(frozen=True, eq=False)
class Posterior:
    """Posterior over states induced by one signal: gamma(w) ~ mu(w) P(s|w)."""

    signal: str
    gamma: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", _frozen(self.gamma))


@dataclass(frozen=True)
class SymmetricTrackingProblem:
    """n states, n actions, payoff h for the matched action and l otherwise,
    uniform prior. Requires h > l."""

    n: int
    h: float
    l: float
    kappa: float
    alpha: float

    def __post_init__(self):
        if self.n < 2:
            raise DimensionMismatch("tracking problems need at least 2 states")
        if not self.h > self.l:
            raise ValueError("tracking problems require h > l")

    def to_decision_problem(self) -> DecisionProblem:
        payoff = np.full((self.n, self.n), float(self.l))
        np.fill_diagonal(payoff, float(self.h))
        prior = np.full(self.n, 1.0 / self.n)
        states = tuple("w%d" % (i + 1) for i in range(self.n))
        actions = tuple("a%d" % (i + 1) for i in range(self.n))
        return build_problem(payoff, prior, self.kappa, self.alpha,
                             states=states, actions=actions)


def build_problem(payoff, prior, kappa, alpha,
                  states: Sequence[str] | None = None,
                  actions: Sequence[str] | None = None) -> DecisionProblem:
    """Normalize and validate the raw ingredients of a decision problem.

    Zero-prior states are dropped (with a warning) and the prior is
    renormalized; alpha within 1e-6 of 1 is snapped to exactly 1.
    """
    payoff = np.array(payoff, dtype=float)
    prior = np.array(prior, dtype=float)
    if payoff.ndim != 2:
        raise DimensionMismatch("payoff must be a matrix indexed [state][action]")
    n, m = payoff.shape
    if prior.ndim != 1 or prior.shape[0] != n:
        raise DimensionMismatch(
            "prior length %d does not match %d payoff rows" % (prior.size, n)
        )
    if m < 2:
        raise DimensionMismatch("problems need at least two actions")
    if not np.all(np.isfinite(payoff)):
        raise ValueError("payoff entries must be finite")
    if np.any(prior < 0) or not np.isfinite(prior).all():
        raise NonStochasticPrior("prior entries must be non-negative and finite")
    if abs(prior.sum() - 1.0) > PROB_TOL:
        raise NonStochasticPrior(
            "prior sums to %.17g, not 1 within %.0e" % (prior.sum(), PROB_TOL)
        )

    kappa = float(kappa)
    alpha = float(alpha)
    if not (np.isfinite(kappa) and kappa > 0):
        raise NonPositiveKappa("kappa must be a positive finite scalar")
    if not (np.isfinite(alpha) and alpha > 0):
        raise NonPositiveAlpha("alpha must be a positive finite scalar")
    if abs(alpha - 1.0) <= SHANNON_SNAP:
        alpha = 1.0

    if states is None:
        states = tuple("w%d" % (i + 1) for i in range(n))
    else:
        states = tuple(str(s) for s in states)
    if actions is None:
        actions = tuple("a%d" % (j + 1) for j in range(m))
    else:
        actions = tuple(str(a) for a in actions)
    if len(states) != n or len(actions) != m:
        raise DimensionMismatch("label counts do not match the payoff shape")

    keep = prior > 0.0
    if not np.all(keep):
        dropped = [states[i] for i in range(n) if not keep[i]]
        warnings.warn(
            "dropping zero-prior states: %s" % ", ".join(dropped),
            stacklevel=2,
        )
        payoff = payoff[keep]
        prior = prior[keep]
        states = tuple(s for s, k in zip(states, keep) if k)
        if len(states) < 1:
            raise NonStochasticPrior("prior has no support")
        prior = prior / prior.sum()

    return DecisionProblem(
        states=states,
        actions=actions,
        payoff=_frozen(payoff),
        prior=_frozen(prior),
        kappa=kappa,
        alpha=alpha,
    )


def validate_problem(raw: dict) -> DecisionProblem:
    """Build a :class:`DecisionProblem` from a parsed problem description.

    ``raw`` must carry exactly the keys ``states``, ``actions``, ``payoff``
    (one row per state), ``prior``, ``kappa`` and ``alpha``; unknown keys
    are rejected. Validating an already-valid problem's description again
    returns an identical structure.
    """
    if not isinstance(raw, dict):
        raise ValueError("problem description must be a mapping")
    unknown = set(raw) - _PROBLEM_KEYS
    if unknown:
        raise ValueError("unknown problem keys: %s" % ", ".join(sorted(unknown)))
    missing = _PROBLEM_KEYS - set(raw)
    if missing:
        raise ValueError("missing problem keys: %s" % ", ".join(sorted(missing)))
    return build_problem(
        raw["payoff"], raw["prior"], raw["kappa"], raw["alpha"],
        states=raw["states"], actions=raw["actions"],
    )


def problem_to_dict(problem: DecisionProblem) -> dict:
    """Inverse of :func:`validate_problem` (modulo normalization)."""
    return {
        "states": list(problem.states),
        "actions": list(problem.actions),
        "payoff": [list(map(float, row)) for row in problem.payoff],
        "prior": [float(p) for p in problem.prior],
        "kappa": problem.kappa,
        "alpha": problem.alpha,
    }


def load_problem(path) -> DecisionProblem:
    """Read a JSON problem file and validate it."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return validate_problem(raw)


def _kernel_of(p) -> np.ndarray:
    if isinstance(p, Experiment):
        return p.kernel
    return np.asarray(p, dtype=float)


def expected_utility(problem: DecisionProblem, p) -> float:
    """sum_w mu(w) sum_a P(a|w) u(a, w)."""
    kernel = _kernel_of(p)
    if kernel.shape != (problem.n_states, problem.n_actions):
        raise DimensionMismatch(
            "kernel shape %s does not match problem shape (%d, %d)"
            % (kernel.shape, problem.n_states, problem.n_actions)
        )
    return float(np.sum(problem.prior[:, None] * kernel * problem.payoff))


def utility_bounds(problem: DecisionProblem) -> tuple[float, float]:
    """(best uninformed expected utility, first-best expected utility)."""
    mu = problem.prior
    u = problem.payoff
    u_min = float(np.max(mu @ u))
    u_max = float(np.sum(mu * np.max(u, axis=1)))
    return u_min, u_max
