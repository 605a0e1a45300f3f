"""Information quantities: Renyi divergence, the alpha-mutual-information
cost family, its barycenter, and a convex transform of the cost.

All quantities are returned in nats. Kernels are indexed [state][signal]
and priors are over states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import AlphaIsOne, DimensionMismatch, NonPositiveAlpha
from .problem import Experiment, _frozen

#: Above this order the power sums are computed in the log domain; below
#: it direct evaluation is faster and accurate.
_PLAIN_ALPHA_MAX = 4.0

Nats = float


@dataclass(frozen=True, eq=False)
class Barycenter:
    """The optimal signal weighting q*(s) for a kernel at a given alpha."""

    q: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))


def _as_kernel(p) -> np.ndarray:
    k = p.kernel if isinstance(p, Experiment) else np.asarray(p, dtype=float)
    if k.ndim != 2:
        raise DimensionMismatch("kernel must be a 2-D matrix")
    return k


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (np.isfinite(alpha) and alpha > 0):
        raise NonPositiveAlpha("alpha must be a positive finite scalar")
    return alpha


def _check_pair(kernel: np.ndarray, prior: np.ndarray):
    if prior.ndim != 1 or prior.shape[0] != kernel.shape[0]:
        raise DimensionMismatch(
            "prior length %d does not match %d kernel rows"
            % (prior.size, kernel.shape[0])
        )


def renyi_divergence(p, q, alpha: float) -> Nats:
    """Renyi divergence D_alpha(p || q) in nats.

    Terms with p_i = 0 contribute nothing. A point with p_i > 0 and
    q_i = 0 makes the divergence +inf when alpha >= 1 and contributes
    nothing when alpha < 1. alpha = 1 is Kullback-Leibler.
    """
    alpha = _check_alpha(alpha)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatch("p and q must be 1-D vectors of equal length")
    pos = p > 0
    if alpha == 1.0:
        if np.any(q[pos] == 0):
            return float("inf")
        return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
    if alpha > 1.0 and np.any(q[pos] == 0):
        return float("inf")
    with np.errstate(divide="ignore"):
        logp = np.log(p[pos])
        logq = np.where(q[pos] > 0, np.log(np.where(q[pos] > 0, q[pos], 1.0)), -np.inf)
    # alpha < 1 with q = 0: (1 - alpha) * (-inf) = -inf, term vanishes.
    terms = alpha * logp + (1.0 - alpha) * logq
    return float(logsumexp(terms) / (alpha - 1.0))


def _power_sums(kernel: np.ndarray, prior: np.ndarray, alpha: float):
    """log T_s with T_s = sum_w mu(w) P(s|w)^alpha, computed stably."""
    if alpha <= _PLAIN_ALPHA_MAX:
        T = prior @ np.power(kernel, alpha)
        with np.errstate(divide="ignore"):
            return np.where(T > 0, np.log(np.where(T > 0, T, 1.0)), -np.inf)
    with np.errstate(divide="ignore"):
        logP = np.where(kernel > 0, np.log(np.where(kernel > 0, kernel, 1.0)), -np.inf)
        logmu = np.log(prior)
    return logsumexp(logmu[:, None] + alpha * logP, axis=0)


def alpha_mutual_information(p, prior, alpha: float) -> Nats:
    """Order-alpha mutual information between states and signals, in nats.

    For alpha != 1 this is (alpha/(alpha-1)) log sum_s T_s^(1/alpha) with
    T_s = sum_w mu(w) P(s|w)^alpha; at alpha = 1 it is Shannon mutual
    information. Always non-negative, and zero exactly for kernels whose
    supported columns are constant across states.
    """
    alpha = _check_alpha(alpha)
    kernel = _as_kernel(p)
    prior = np.asarray(prior, dtype=float)
    _check_pair(kernel, prior)
    if alpha == 1.0:
        return shannon_mutual_information(kernel, prior)
    logT = _power_sums(kernel, prior, alpha)
    logC = logsumexp(logT / alpha)
    val = alpha / (alpha - 1.0) * logC
    # Clamp tiny negative rounding residue: the quantity is non-negative.
    return float(val) if val > 0.0 else 0.0


def shannon_mutual_information(p, prior) -> Nats:
    """Shannon mutual information sum_{w,s} mu P log(P / q), q the signal
    marginal, with 0 log 0 = 0."""
    kernel = _as_kernel(p)
    prior = np.asarray(prior, dtype=float)
    _check_pair(kernel, prior)
    q = prior @ kernel
    pos = kernel > 0
    ratio = np.where(pos, kernel / np.where(q[None, :] > 0, q[None, :], 1.0), 1.0)
    val = float(np.sum(prior[:, None] * np.where(pos, kernel, 0.0) * np.log(ratio)))
    return val if val > 0.0 else 0.0


def barycenter(p, prior, alpha: float) -> Barycenter:
    """The signal weighting q*(s) proportional to T_s^(1/alpha) (the signal
    marginal itself at alpha = 1). This is the minimizer over weightings of
    the divergence form of the order-alpha cost."""
    alpha = _check_alpha(alpha)
    kernel = _as_kernel(p)
    prior = np.asarray(prior, dtype=float)
    _check_pair(kernel, prior)
    if alpha == 1.0:
        q = prior @ kernel
        q = q / q.sum()
        return Barycenter(q=q, alpha=alpha)
    logT = _power_sums(kernel, prior, alpha)
    logw = logT / alpha
    q = np.exp(logw - logsumexp(logw))
    q = q / q.sum()
    return Barycenter(q=q, alpha=alpha)


def transformed_cost(p, prior, alpha: float) -> float:
    """(1/(alpha-1)) sum_s T_s^(1/alpha): a strictly monotone transform of
    the order-alpha cost that is convex in the kernel for every alpha != 1.
    Raises AlphaIsOne at alpha = 1, where the transform degenerates."""
    alpha = _check_alpha(alpha)
    if alpha == 1.0:
        raise AlphaIsOne("the convex transform is undefined at alpha = 1")
    kernel = _as_kernel(p)
    prior = np.asarray(prior, dtype=float)
    _check_pair(kernel, prior)
    logT = _power_sums(kernel, prior, alpha)
    C = float(np.exp(logsumexp(logT / alpha)))
    return C / (alpha - 1.0)
