"""Finite-arm primal learner: exponential weights with implicit-exploration estimates
plus fixed-share mixing.

The learning rate and exploration bias depend only on (K, T), never on the
observed utility scale; that is what makes the learner usable inside the
primal-dual loop, where utilities carry an unknown multiplier magnitude.
Fixed-share mixing (sigma = 1/T) keeps some weight on every arm, which is the
mechanism behind low regret on every contiguous window, not just the full
horizon.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Exp3Six"]


class Exp3Six:
    """EXP3 with implicit exploration (IX) loss estimates and fixed-share mixing.

    Utilities are turned into signed losses via ``loss = -utility`` and the IX
    estimator ``loss / (p + gamma)`` is applied to the chosen arm unchanged;
    no affine normalization is applied, since any such normalization would
    need the (unknown) utility range.
    """

    def __init__(self, K: int, T: int, delta: float = 0.05):
        if K < 2:
            raise ValueError("K must be >= 2")
        if T < 1:
            raise ValueError("T must be >= 1")
        self.K = K
        self.T = T
        self.delta = delta
        self.eta_exp = math.sqrt(math.log(K) / (K * T))
        self.gamma_ix = self.eta_exp / 2.0
        self.sigma_share = 1.0 / T
        self.log_weights = np.zeros(K)

    def distribution(self) -> np.ndarray:
        """Current sampling distribution (softmax of the log weights)."""
        lw = self.log_weights - np.max(self.log_weights)
        w = np.exp(lw)
        return w / w.sum()

    def sample(self, rng: np.random.Generator) -> tuple[int, float]:
        """Draw an arm; returns the arm and the exact probability it was drawn with."""
        p = self.distribution()
        u = rng.random()
        a = int(np.searchsorted(np.cumsum(p), u, side="right"))
        a = min(a, self.K - 1)
        return a, float(p[a])

    def update(self, arm: int, p_arm: float, utility: float) -> None:
        """Feed back the chosen arm's utility.

        ``p_arm`` must be the probability the arm was sampled with.  The IX
        estimate only touches the chosen arm; the fixed-share step then mixes
        a ``sigma/K`` fraction of the total weight back onto every arm.
        """
        if not (0.0 < p_arm <= 1.0):
            raise ValueError("p_arm must lie in (0, 1]")
        loss = -float(utility)
        est = loss / (p_arm + self.gamma_ix)
        self.log_weights[arm] -= self.eta_exp * est
        mx = float(np.max(self.log_weights))
        w = np.exp(self.log_weights - mx)
        sigma = self.sigma_share
        mixed = (1.0 - sigma) * w + (sigma / self.K) * w.sum()
        self.log_weights = np.log(mixed)  # common scale dropped; only ratios matter
