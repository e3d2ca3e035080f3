"""Benchmark instances: scripted adversarial tables, stochastic generators,
contextual linear environments, plus LP-based baselines (optimal values,
feasibility margins, safe mixtures).

Instances are immutable descriptions; the companion ``*Env`` classes do the
per-round sampling.  Scripted instances are deterministic.  Stochastic noise
is two-point: rewards are Bernoulli around the mean, costs are +/-1 coins
with the matching mean, which keeps every draw inside the admissible box
while maximizing variance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import serialize
from .core import Outcome, _readonly
from .lp import InfeasibleError, minimax_mixture, simplex_core, solve_lp

__all__ = [
    "Phase",
    "ScriptedInstance",
    "StochasticInstance",
    "ContextualInstance",
    "InstanceSpec",
    "BaselineReport",
    "make_example1",
    "make_lowerbound",
    "make_stochastic",
    "make_contextual_linear",
    "make_env",
    "ScriptedEnv",
    "StochasticEnv",
    "ContextualEnv",
    "baselines",
    "instance_to_json",
    "instance_from_json",
    "save_instance",
    "load_instance",
    "MAX_RHO_ADV_ROWS",
]

SCHEMA_VERSION = 1
MAX_RHO_ADV_ROWS = 10_000


def _check_reward_table(r: np.ndarray) -> None:
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise ValueError("rewards must lie in [0, 1]")


def _check_cost_table(g: np.ndarray) -> None:
    if np.any(np.abs(g) > 1.0):
        raise ValueError("costs must lie in [-1, 1]")


@dataclass(frozen=True)
class Phase:
    """Contiguous block of rounds with constant reward/cost tables (1-based, inclusive)."""

    start: int
    end: int
    rewards: np.ndarray  # (K,)
    costs: np.ndarray    # (K, m)

    def __post_init__(self):
        object.__setattr__(self, "rewards", _readonly(self.rewards))
        object.__setattr__(self, "costs", _readonly(np.atleast_2d(self.costs)))
        if self.start < 1 or self.end < self.start:
            raise ValueError(f"bad phase bounds [{self.start}, {self.end}]")
        _check_reward_table(self.rewards)
        _check_cost_table(self.costs)

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class ScriptedInstance:
    K: int
    m: int
    T: int
    phases: tuple[Phase, ...]
    kind: str = field(default="adversarial-scripted", init=False)

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        t = 1
        for ph in self.phases:
            if ph.start != t:
                raise ValueError("phases must partition [1, T] contiguously")
            if ph.rewards.shape != (self.K,) or ph.costs.shape != (self.K, self.m):
                raise ValueError("phase table shapes do not match (K, m)")
            t = ph.end + 1
        if t != self.T + 1:
            raise ValueError("phases must cover exactly [1, T]")

    def mean_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Time-averaged reward vector (K,) and cost matrix (K, m)."""
        f = np.zeros(self.K)
        g = np.zeros((self.K, self.m))
        for ph in self.phases:
            f += ph.length * ph.rewards
            g += ph.length * ph.costs
        return f / self.T, g / self.T


@dataclass(frozen=True)
class StochasticInstance:
    K: int
    m: int
    T: int
    mean_rewards: np.ndarray    # (K,)
    mean_costs: np.ndarray      # (K, m)
    noise: str = "bernoulli-pm1"
    kind: str = field(default="stochastic", init=False)

    def __post_init__(self):
        object.__setattr__(self, "mean_rewards", _readonly(self.mean_rewards))
        object.__setattr__(self, "mean_costs", _readonly(np.atleast_2d(self.mean_costs)))
        if self.mean_rewards.shape != (self.K,) or self.mean_costs.shape != (self.K, self.m):
            raise ValueError("mean table shapes do not match (K, m)")
        _check_reward_table(self.mean_rewards)
        _check_cost_table(self.mean_costs)
        if self.noise != "bernoulli-pm1":
            raise ValueError(f"unknown noise model {self.noise!r}")


@dataclass(frozen=True)
class ContextualInstance:
    K: int
    m: int
    T: int
    d: int
    features: np.ndarray        # (n_contexts, K, d), rows with l2 norm <= 1
    theta_reward: np.ndarray    # (d,), l2 norm <= 1
    theta_costs: np.ndarray     # (m, d), rows with l2 norm <= 1
    context_schedule: Union[str, tuple[int, ...]] = "iid-uniform"
    kind: str = field(default="contextual-linear", init=False)

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(self.features))
        object.__setattr__(self, "theta_reward", _readonly(self.theta_reward))
        object.__setattr__(self, "theta_costs", _readonly(np.atleast_2d(self.theta_costs)))
        if self.features.ndim != 3 or self.features.shape[1:] != (self.K, self.d):
            raise ValueError("features must have shape (n_contexts, K, d)")
        if self.theta_reward.shape != (self.d,) or self.theta_costs.shape != (self.m, self.d):
            raise ValueError("parameter shapes do not match (m, d)")
        tol = 1e-9
        if np.linalg.norm(self.theta_reward) > 1.0 + tol:
            raise ValueError("reward parameter must have l2 norm <= 1")
        if np.any(np.linalg.norm(self.theta_costs, axis=1) > 1.0 + tol):
            raise ValueError("every cost parameter must have l2 norm <= 1")
        if np.any(np.linalg.norm(self.features, axis=2) > 1.0 + tol):
            raise ValueError("every feature vector must have l2 norm <= 1")
        if isinstance(self.context_schedule, str):
            if self.context_schedule != "iid-uniform":
                raise ValueError(f"unknown context schedule {self.context_schedule!r}")
        else:
            sched = tuple(int(z) for z in self.context_schedule)
            object.__setattr__(self, "context_schedule", sched)
            if len(sched) != self.T or any(not (0 <= z < self.n_contexts) for z in sched):
                raise ValueError("scripted context schedule must list T valid context indices")

    @property
    def n_contexts(self) -> int:
        return self.features.shape[0]

    def mean_reward(self, z: int, a: int) -> float:
        return 0.5 * (1.0 + float(np.dot(self.features[z, a], self.theta_reward)))

    def mean_costs(self, z: int, a: int) -> np.ndarray:
        return self.theta_costs @ self.features[z, a]


InstanceSpec = Union[ScriptedInstance, StochasticInstance, ContextualInstance]


# ---------------------------------------------------------------------------
# builders

def make_example1(T: int, rho: float) -> ScriptedInstance:
    """Three-arm, one-constraint pacing trap with three equal phases.

    Arm 1 is the safe arm: zero reward, cost ``-rho`` forever.  Arm 3 pays 1
    in the first third, arm 2 pays 1 in the second third; both arms'
    costs switch from 0 to ``rho`` in the final third, where every reward is
    gone.  A learner that coasts on the first two thirds walks straight into
    linear violations at the end.
    """
    if T % 3 != 0 or T <= 0:
        raise ValueError("T must be a positive multiple of 3")
    if not (0.0 < rho <= 1.0):
        raise ValueError("rho must lie in (0, 1]")
    third = T // 3
    zero3 = np.zeros(3)
    g_early = np.array([[-rho], [0.0], [0.0]])
    g_late = np.array([[-rho], [rho], [rho]])
    phases = (
        Phase(1, third, np.array([0.0, 0.0, 1.0]), g_early),
        Phase(third + 1, 2 * third, np.array([0.0, 1.0, 0.0]), g_early),
        Phase(2 * third + 1, T, zero3, g_late),
    )
    return ScriptedInstance(K=3, m=1, T=T, phases=phases)


def make_lowerbound(T: int, rho: float, delta_param: float) -> tuple[ScriptedInstance, ScriptedInstance]:
    """The two-instance pair showing the competitive ratio cannot be beaten.

    Both instances agree on the first half of the horizon: arm 1 pays 1 at
    cost 1, arm 2 pays nothing at cost ``-rho``.  Instance A then turns arm 1
    worthless (reward 0, cost -1); instance B keeps arm 1 paying at cost 1
    while shrinking arm 2's slack to ``-delta_param * rho``.
    """
    if T % 2 != 0 or T <= 0:
        raise ValueError("T must be a positive even number")
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    if not (0.0 < delta_param <= 1.0):
        raise ValueError("delta_param must lie in (0, 1]")
    half = T // 2
    first_f = np.array([1.0, 0.0])
    first_g = np.array([[1.0], [-rho]])
    inst_a = ScriptedInstance(
        K=2, m=1, T=T,
        phases=(
            Phase(1, half, first_f, first_g),
            Phase(half + 1, T, np.zeros(2), np.array([[-1.0], [-rho]])),
        ),
    )
    inst_b = ScriptedInstance(
        K=2, m=1, T=T,
        phases=(
            Phase(1, half, first_f, first_g),
            Phase(half + 1, T, first_f, np.array([[1.0], [-delta_param * rho]])),
        ),
    )
    return inst_a, inst_b


def make_stochastic(mean_rewards, mean_costs, T: int, seed: Optional[int] = None) -> "StochasticEnv":
    """Sampling environment with Bernoulli rewards and +/-1 costs around the given means."""
    inst = StochasticInstance(
        K=len(mean_rewards), m=np.atleast_2d(mean_costs).shape[1], T=T,
        mean_rewards=np.asarray(mean_rewards, dtype=float),
        mean_costs=np.asarray(mean_costs, dtype=float),
    )
    return StochasticEnv(inst, seed=seed)


def make_contextual_linear(d: int, K: int, n_contexts: int, theta_reward, theta_costs,
                           T: int, seed: Optional[int] = None,
                           features: Optional[np.ndarray] = None,
                           context_schedule: Union[str, Sequence[int]] = "iid-uniform") -> "ContextualEnv":
    """Linear contextual environment; features are drawn inside the unit ball unless given."""
    theta_reward = np.asarray(theta_reward, dtype=float)
    theta_costs = np.atleast_2d(np.asarray(theta_costs, dtype=float))
    if features is None:
        rng = np.random.default_rng(seed)
        raw = rng.normal(size=(n_contexts, K, d))
        norms = np.linalg.norm(raw, axis=2, keepdims=True)
        features = raw / np.maximum(norms, 1e-12)
        features *= rng.uniform(0.3, 1.0, size=(n_contexts, K, 1))
    inst = ContextualInstance(
        K=K, m=theta_costs.shape[0], T=T, d=d,
        features=np.asarray(features, dtype=float),
        theta_reward=theta_reward, theta_costs=theta_costs,
        context_schedule=context_schedule if isinstance(context_schedule, str) else tuple(context_schedule),
    )
    return ContextualEnv(inst, seed=seed)


# ---------------------------------------------------------------------------
# sampling environments

class ScriptedEnv:
    """Deterministic playback of a scripted instance."""

    def __init__(self, instance: ScriptedInstance, seed: Optional[int] = None):
        self.instance = instance
        self.K, self.m, self.T = instance.K, instance.m, instance.T
        self._starts = np.array([ph.start for ph in instance.phases])

    def _phase(self, t: int) -> Phase:
        if not (1 <= t <= self.T):
            raise ValueError(f"round {t} outside horizon [1, {self.T}]")
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        return self.instance.phases[idx]

    def reward_row(self, t: int) -> np.ndarray:
        return self._phase(t).rewards

    def cost_table(self, t: int) -> np.ndarray:
        return self._phase(t).costs

    def outcome(self, t: int, arm: int, rng: Optional[np.random.Generator] = None) -> Outcome:
        ph = self._phase(t)
        return Outcome(float(ph.rewards[arm]), ph.costs[arm])


class StochasticEnv:
    """Two-point noise around fixed mean tables; reproducible given a seed."""

    def __init__(self, instance: StochasticInstance, seed: Optional[int] = None):
        self.instance = instance
        self.K, self.m, self.T = instance.K, instance.m, instance.T
        self._rng = np.random.default_rng(seed)

    def outcome(self, t: int, arm: int, rng: Optional[np.random.Generator] = None) -> Outcome:
        rng = self._rng if rng is None else rng
        fbar = self.instance.mean_rewards[arm]
        gbar = self.instance.mean_costs[arm]
        reward = 1.0 if rng.random() < fbar else 0.0
        costs = np.where(rng.random(self.m) < 0.5 * (1.0 + gbar), 1.0, -1.0)
        return Outcome(reward, costs)


class ContextualEnv:
    """Linear-mean contextual environment with the same two-point noise."""

    def __init__(self, instance: ContextualInstance, seed: Optional[int] = None):
        self.instance = instance
        self.K, self.m, self.T = instance.K, instance.m, instance.T
        self.d = instance.d
        self.n_contexts = instance.n_contexts
        self._rng = np.random.default_rng(seed)

    def context(self, t: int, rng: Optional[np.random.Generator] = None) -> int:
        sched = self.instance.context_schedule
        if isinstance(sched, tuple):
            return sched[t - 1]
        rng = self._rng if rng is None else rng
        return int(rng.integers(self.n_contexts))

    def feature(self, z: int, arm: int) -> np.ndarray:
        return self.instance.features[z, arm]

    def mean_reward(self, z: int, arm: int) -> float:
        return self.instance.mean_reward(z, arm)

    def mean_costs(self, z: int, arm: int) -> np.ndarray:
        return self.instance.mean_costs(z, arm)

    def outcome(self, t: int, z: int, arm: int, rng: Optional[np.random.Generator] = None) -> Outcome:
        rng = self._rng if rng is None else rng
        fbar = self.mean_reward(z, arm)
        gbar = self.mean_costs(z, arm)
        reward = 1.0 if rng.random() < fbar else 0.0
        costs = np.where(rng.random(self.m) < 0.5 * (1.0 + gbar), 1.0, -1.0)
        return Outcome(reward, costs)


def make_env(instance: InstanceSpec, seed: Optional[int] = None):
    if isinstance(instance, ScriptedInstance):
        return ScriptedEnv(instance, seed)
    if isinstance(instance, StochasticInstance):
        return StochasticEnv(instance, seed)
    if isinstance(instance, ContextualInstance):
        return ContextualEnv(instance, seed)
    raise TypeError(f"unknown instance type {type(instance)}")


# ---------------------------------------------------------------------------
# baselines

@dataclass(frozen=True)
class BaselineReport:
    """Benchmark values for an instance.

    ``opt_adv`` is the best single action's cumulative reward over the whole
    horizon (mean tables for noisy instances); ``opt_stoc`` is the per-round
    value of the best constraint-respecting mixture; the ``rho`` fields are
    the feasibility margins and ``safe_strategy`` the mixture attaining
    ``rho_adv`` (a per-context policy matrix for contextual instances).
    """

    opt_adv: float
    opt_stoc: float
    rho_adv: float
    rho_stoc: float
    safe_strategy: np.ndarray

    def as_dict(self) -> dict:
        return {
            "opt_adv": self.opt_adv,
            "opt_stoc": self.opt_stoc,
            "rho_adv": self.rho_adv,
            "rho_stoc": self.rho_stoc,
            "safe_strategy": self.safe_strategy.tolist(),
        }


def _stationary_baselines(fbar: np.ndarray, gbar: np.ndarray) -> tuple[float, float, np.ndarray]:
    """(opt_stoc per round, rho_stoc, safe mixture) from mean tables."""
    xi_safe, s = minimax_mixture(gbar.T)
    try:
        _, opt_stoc = solve_lp(fbar, gbar.T, np.zeros(gbar.shape[1]))
    except InfeasibleError as exc:
        raise InfeasibleError(
            "no mixture satisfies the constraints in expectation (feasibility assumption violated)"
        ) from exc
    return float(opt_stoc), -float(s), xi_safe


def baselines(instance: InstanceSpec) -> BaselineReport:
    """Compute the benchmark report for any instance kind.

    For scripted instances the adversarial margin ``rho_adv`` uses one LP row
    per (phase, constraint); for noisy instances the adversarial quantities
    are evaluated on the mean tables, which is the only well-defined choice
    in simulation.
    """
    if isinstance(instance, ScriptedInstance):
        sums = np.zeros(instance.K)
        for ph in instance.phases:
            sums += ph.length * ph.rewards
        opt_adv = float(np.max(sums))
        rows = [ph.costs[:, i] for ph in instance.phases for i in range(instance.m)]
        if len(rows) > MAX_RHO_ADV_ROWS:
            raise ValueError(f"too many (phase, constraint) rows for the margin LP ({len(rows)})")
        xi_safe, s = minimax_mixture(np.array(rows))
        fbar, gbar = instance.mean_tables()
        opt_stoc, rho_stoc, _ = _stationary_baselines(fbar, gbar)
        return BaselineReport(opt_adv, opt_stoc, -float(s), rho_stoc, xi_safe)

    if isinstance(instance, StochasticInstance):
        fbar = np.asarray(instance.mean_rewards)
        gbar = np.asarray(instance.mean_costs)
        opt_stoc, rho_stoc, xi_safe = _stationary_baselines(fbar, gbar)
        opt_adv = float(instance.T * np.max(fbar))
        return BaselineReport(opt_adv, opt_stoc, rho_stoc, rho_stoc, xi_safe)

    if isinstance(instance, ContextualInstance):
        return _contextual_baselines(instance)
    raise TypeError(f"unknown instance type {type(instance)}")


def _contextual_baselines(instance: ContextualInstance) -> BaselineReport:
    nz, K, m = instance.n_contexts, instance.K, instance.m
    if isinstance(instance.context_schedule, tuple):
        counts = np.bincount(np.array(instance.context_schedule), minlength=nz)
        p_ctx = counts / counts.sum()
    else:
        p_ctx = np.full(nz, 1.0 / nz)
    fbar = np.array([[instance.mean_reward(z, a) for a in range(K)] for z in range(nz)])
    gbar = np.array([[instance.mean_costs(z, a) for a in range(K)] for z in range(nz)])  # (nz,K,m)

    # variables x[z, a] = p(z) * pi(a | z), flattened row-major
    n = nz * K
    A_eq = np.zeros((nz, n))
    for z in range(nz):
        A_eq[z, z * K:(z + 1) * K] = 1.0
    cost_rows = np.array([gbar[:, :, i].ravel() for i in range(m)])

    try:
        _, opt_stoc = simplex_core(fbar.ravel(), A_ub=cost_rows, b_ub=np.zeros(m),
                                   A_eq=A_eq, b_eq=p_ctx)
    except InfeasibleError as exc:
        raise InfeasibleError(
            "no policy satisfies the constraints in expectation (feasibility assumption violated)"
        ) from exc

    # margin: min over policies of the worst expected constraint
    shift = 1.0 + float(np.max(np.abs(cost_rows)))
    c_epi = np.zeros(n + 1)
    c_epi[n] = -1.0
    A_ub = np.hstack([cost_rows, -np.ones((m, 1))])
    A_eq_epi = np.hstack([A_eq, np.zeros((nz, 1))])
    x_epi, _ = simplex_core(c_epi, A_ub=A_ub, b_ub=-shift * np.ones(m),
                            A_eq=A_eq_epi, b_eq=p_ctx)
    rho = -float(np.max(cost_rows @ x_epi[:n]))
    policy = x_epi[:n].reshape(nz, K)
    row_sums = policy.sum(axis=1, keepdims=True)
    policy = np.where(row_sums > 0, policy / np.maximum(row_sums, 1e-300), 1.0 / K)
    opt_adv = float(instance.T * np.dot(p_ctx, fbar.max(axis=1)))
    return BaselineReport(opt_adv, float(opt_stoc), float(rho), float(rho), policy)


# ---------------------------------------------------------------------------
# JSON schema (version 1); tables are row-major

def instance_to_json(instance: InstanceSpec) -> dict:
    if isinstance(instance, ScriptedInstance):
        return {
            "v": SCHEMA_VERSION,
            "kind": instance.kind,
            "K": instance.K, "m": instance.m, "T": instance.T,
            "phases": [
                {"start": ph.start, "end": ph.end,
                 "rewards": ph.rewards.tolist(), "costs": ph.costs.tolist()}
                for ph in instance.phases
            ],
        }
    if isinstance(instance, StochasticInstance):
        return {
            "v": SCHEMA_VERSION,
            "kind": instance.kind,
            "K": instance.K, "m": instance.m, "T": instance.T,
            "mean_rewards": instance.mean_rewards.tolist(),
            "mean_costs": instance.mean_costs.tolist(),
            "noise": instance.noise,
        }
    if isinstance(instance, ContextualInstance):
        sched = instance.context_schedule
        return {
            "v": SCHEMA_VERSION,
            "kind": instance.kind,
            "K": instance.K, "m": instance.m, "T": instance.T, "d": instance.d,
            "features": instance.features.tolist(),
            "theta_reward": instance.theta_reward.tolist(),
            "theta_costs": instance.theta_costs.tolist(),
            "context_schedule": sched if isinstance(sched, str) else list(sched),
        }
    raise TypeError(f"unknown instance type {type(instance)}")


def instance_from_json(doc: dict) -> InstanceSpec:
    if doc.get("v") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('v')!r}")
    kind = doc.get("kind")
    if kind == "adversarial-scripted":
        phases = tuple(
            Phase(ph["start"], ph["end"], np.array(ph["rewards"], dtype=float),
                  np.array(ph["costs"], dtype=float))
            for ph in doc["phases"]
        )
        return ScriptedInstance(K=doc["K"], m=doc["m"], T=doc["T"], phases=phases)
    if kind == "stochastic":
        return StochasticInstance(
            K=doc["K"], m=doc["m"], T=doc["T"],
            mean_rewards=np.array(doc["mean_rewards"], dtype=float),
            mean_costs=np.array(doc["mean_costs"], dtype=float),
            noise=doc.get("noise", "bernoulli-pm1"),
        )
    if kind == "contextual-linear":
        sched = doc.get("context_schedule", "iid-uniform")
        return ContextualInstance(
            K=doc["K"], m=doc["m"], T=doc["T"], d=doc["d"],
            features=np.array(doc["features"], dtype=float),
            theta_reward=np.array(doc["theta_reward"], dtype=float),
            theta_costs=np.array(doc["theta_costs"], dtype=float),
            context_schedule=sched if isinstance(sched, str) else tuple(sched),
        )
    raise ValueError(f"unknown instance kind {kind!r}")


def save_instance(instance: InstanceSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize.dumps(instance_to_json(instance)))
        fh.write("\n")


def load_instance(path) -> InstanceSpec:
    with open(path) as fh:
        return instance_from_json(json.load(fh))
