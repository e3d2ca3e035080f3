"""Inverse-gap weighting: the contextual action distribution built from
estimated payoffs, with the normalizer found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DualVector

__all__ = ["IgwConfig", "IgwDecision", "igw_distribution", "igw_act", "default_igw_eta"]

_BISECT_TOL = 1e-12
_BISECT_MAX_ITERS = 200


def default_igw_eta(K: int, T: int) -> float:
    """Learning rate ``sqrt(K*T)`` for the contextual primal player."""
    return math.sqrt(K * T)


@dataclass(frozen=True)
class IgwConfig:
    eta_p: float
    K: int
    bisection_tol: float = _BISECT_TOL

    def __post_init__(self):
        if self.eta_p < 0.0:
            raise ValueError("eta_p must be >= 0")
        if self.K < 2:
            raise ValueError("K must be >= 2")


@dataclass(frozen=True)
class IgwDecision:
    action: int
    xi: np.ndarray
    mu: float
    lhat: np.ndarray
    fhat: np.ndarray
    ghat: np.ndarray  # (K, m)


def igw_distribution(lhat, eta_p: float) -> tuple[np.ndarray, float]:
    """Action distribution ``xi(a) = 1 / (mu + eta_p * (max lhat - lhat(a)))``.

    The normalizer ``mu`` makes the masses sum to one; it lives in ``[1, K]``
    because the total is at least 1 at ``mu = 1`` (the greedy action alone
    contributes 1) and at most 1 at ``mu = K``.  The sum is strictly
    decreasing in ``mu``, so bisection pins it down; any residual mass (at
    most the bisection tolerance) is assigned to the first greedy action.
    """
    lhat = np.asarray(lhat, dtype=float)
    if lhat.ndim != 1 or lhat.size < 1:
        raise ValueError("lhat must be a nonempty vector")
    if not np.all(np.isfinite(lhat)):
        raise ValueError("lhat entries must be finite")
    if eta_p < 0.0:
        raise ValueError("eta_p must be >= 0")
    K = lhat.size
    gaps = (float(np.max(lhat)) - lhat) * eta_p
    scaled = gaps.tolist()
    lo, hi = 1.0, float(K)
    for _ in range(_BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        total = 0.0
        for gp in scaled:
            total += 1.0 / (mid + gp)
        if total > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_TOL:
            break
    mu = 0.5 * (lo + hi)
    xi = 1.0 / (mu + gaps)
    greedy = int(np.argmax(lhat))
    xi[greedy] += 1.0 - xi.sum()
    return xi, mu


def igw_act(reward_oracle, cost_oracles, z: int, lam, cfg: IgwConfig,
            rng: np.random.Generator) -> IgwDecision:
    """Score every action with the estimated payoff under the current multiplier, then sample.

    ``lhat(a) = fhat(z, a) - <lam, ghat(z, a)>`` with the oracles' current
    regressors; the decision also carries the per-action estimates so the
    caller can do error bookkeeping without re-querying the oracles.
    """
    lam_arr = lam.components if isinstance(lam, DualVector) else np.asarray(lam, dtype=float)
    K = cfg.K
    fhat = np.array([reward_oracle.predict(z, a) for a in range(K)])
    ghat = np.array([[oracle.predict(z, a) for oracle in cost_oracles] for a in range(K)])
    lhat = fhat - ghat @ lam_arr
    xi, mu = igw_distribution(lhat, cfg.eta_p)
    u = rng.random()
    action = int(np.searchsorted(np.cumsum(xi), u, side="right"))
    action = min(action, K - 1)
    return IgwDecision(action=action, xi=xi, mu=mu, lhat=lhat, fhat=fhat, ghat=ghat)
