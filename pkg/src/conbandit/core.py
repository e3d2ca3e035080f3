"""Shared domain types, the Lagrangian payoff, and the framework's step-size constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Outcome",
    "DualVector",
    "FrameworkConfig",
    "RoundRecord",
    "Trace",
    "lagrangian",
    "concentration_constant",
    "eta_ogd",
    "default_primal_bound",
]


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


def l1_norm(v: np.ndarray) -> float:
    """Sum of components of a nonnegative vector (used for all dual norms)."""
    return float(np.sum(v))


@dataclass(frozen=True)
class Outcome:
    """One round's observed payoff: a reward in [0,1] and one cost per constraint in [-1,1]."""

    reward: float
    costs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "costs", _readonly(self.costs))
        if not (0.0 <= self.reward <= 1.0):
            raise ValueError(f"reward {self.reward} outside [0, 1]")
        if self.costs.ndim != 1:
            raise ValueError("costs must be a 1-d vector")
        if self.costs.size and (np.max(np.abs(self.costs)) > 1.0 or not np.all(np.isfinite(self.costs))):
            raise ValueError("every cost component must lie in [-1, 1]")

    @property
    def m(self) -> int:
        return self.costs.size


@dataclass(frozen=True)
class DualVector:
    """Nonnegative vector of Lagrange multipliers."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _readonly(self.components))
        if self.components.ndim != 1:
            raise ValueError("multipliers must be a 1-d vector")
        if not np.all(np.isfinite(self.components)) or np.any(self.components < 0.0):
            raise ValueError("every multiplier must be finite and >= 0")

    @classmethod
    def zeros(cls, m: int) -> "DualVector":
        return cls(np.zeros(m))

    def l1(self) -> float:
        return l1_norm(self.components)

    def __len__(self) -> int:
        return self.components.size


@dataclass
class FrameworkConfig:
    """Run-level knobs shared by the interaction loops.

    ``primal_bound_estimate`` is the a-priori bound on the primal learner's
    weakly adaptive regret that enters the dual step size; when left ``None``
    it defaults to ``sqrt(K*T) * ln(K*T/delta)``, the finite-arm learner's
    high-probability bound.  ``eta_ogd_override`` replaces the derived dual
    step size entirely when set.
    """

    T: int
    m: int
    K: int
    delta: float = 0.05
    eta_ogd_override: Optional[float] = None
    primal_bound_estimate: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")
        if self.eta_ogd_override is not None and self.eta_ogd_override <= 0.0:
            raise ValueError("eta_ogd_override must be positive")
        if self.primal_bound_estimate is not None and self.primal_bound_estimate <= 0.0:
            raise ValueError("primal_bound_estimate must be positive")

    def dual_eta(self) -> float:
        """Dual step size: the override if given, else the derived safe rate."""
        if self.eta_ogd_override is not None:
            return self.eta_ogd_override
        bound = self.primal_bound_estimate
        if bound is None:
            bound = default_primal_bound(self.K, self.T, self.delta)
        return eta_ogd(self.m, bound, concentration_constant(self.T, self.delta))


@dataclass(frozen=True)
class RoundRecord:
    """Per-round log entry. ``dual_gradient`` is the observed cost vector fed to the dual player."""

    t: int
    action: int
    lam: DualVector
    outcome: Outcome
    primal_utility: float
    dual_gradient: np.ndarray
    context: Optional[int] = None


@dataclass
class Trace:
    """Full run log plus aggregates recomputable from the records.

    Aggregates use compensated (``math.fsum``) summation so recomputation
    from the records reproduces them bit for bit.  ``lam_final`` is the
    multiplier left standing after the last update, one step past the last
    record's snapshot.
    """

    records: list[RoundRecord]
    cum_reward: float
    cum_violations: np.ndarray
    max_dual_l1: float
    utility_range: float
    lam_final: DualVector
    dual_eta: float
    oracle_errors: Optional["object"] = None

    @property
    def T(self) -> int:
        return len(self.records)

    @property
    def m(self) -> int:
        return len(self.lam_final)

    def violation_max(self) -> float:
        return float(np.max(self.cum_violations)) if self.m else 0.0

    def lambdas(self) -> np.ndarray:
        """(T, m) array of the multipliers used each round."""
        return np.array([r.lam.components for r in self.records], dtype=float).reshape(self.T, self.m)

    def gradients(self) -> np.ndarray:
        """(T, m) array of observed cost vectors."""
        return np.array([r.dual_gradient for r in self.records], dtype=float).reshape(self.T, self.m)

    def rewards(self) -> np.ndarray:
        return np.array([r.outcome.reward for r in self.records], dtype=float)

    def actions(self) -> np.ndarray:
        return np.array([r.action for r in self.records], dtype=int)

    @classmethod
    def from_records(cls, records: Sequence[RoundRecord], lam_final: DualVector, dual_eta: float,
                     oracle_errors=None) -> "Trace":
        cum_reward = math.fsum(r.outcome.reward for r in records)
        m = len(lam_final)
        cum_violations = _readonly(
            [math.fsum(r.dual_gradient[i] for r in records) for i in range(m)]
        )
        max_dual = max((r.lam.l1() for r in records), default=0.0)
        util_range = max((abs(r.primal_utility) for r in records), default=0.0)
        return cls(
            records=list(records),
            cum_reward=cum_reward,
            cum_violations=cum_violations,
            max_dual_l1=max_dual,
            utility_range=util_range,
            lam_final=lam_final,
            dual_eta=dual_eta,
            oracle_errors=oracle_errors,
        )


def lagrangian(f_val: float, g_vec, lam) -> float:
    """Zero-sum payoff between the players: ``f - <lam, g>``."""
    g = np.asarray(g_vec, dtype=float)
    lam_arr = lam.components if isinstance(lam, DualVector) else np.asarray(lam, dtype=float)
    if g.shape != lam_arr.shape:
        raise ValueError(f"dimension mismatch: costs {g.shape} vs multipliers {lam_arr.shape}")
    return float(f_val - np.dot(lam_arr, g))


def concentration_constant(T: int, delta: float) -> float:
    """High-probability martingale deviation width ``sqrt(16 T ln(2T/delta))`` (natural log)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(16.0 * T * math.log(2.0 * T / delta))


def eta_ogd(m: int, primal_bound: float, E: float) -> float:
    """Dual step size ``1 / (800 m max(primal_bound, E))``.

    Small enough that the dual player's multipliers stay bounded by ``13 m / rho``
    without any projection box, whatever the feasibility margin ``rho`` is.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if primal_bound <= 0.0 or E <= 0.0:
        raise ValueError("primal_bound and E must be positive")
    return 1.0 / (800.0 * m * max(primal_bound, E))


def default_primal_bound(K: int, T: int, delta: float) -> float:
    """A-priori weakly adaptive regret bound for the finite-arm primal learner."""
    if K < 2 or T < 1 or not (0.0 < delta < 1.0):
        raise ValueError("need K >= 2, T >= 1, delta in (0, 1)")
    return math.sqrt(K * T) * math.log(K * T / delta)
