"""Primal-dual interaction loops, the scripted lazy-pair counterexample,
metric computation against baselines, and experiment sweeps.

Loop contract (finite-arm loop): the primal samples *before* the dual's
current multiplier is consulted, the environment reveals the played arm's
outcome, the primal is fed the penalized utility, and the dual ascends on
the observed cost vector.  The contextual loop differs in exactly one place:
the primal sees the multiplier (and the context) before acting.

Randomness: each run owns a master seed; primal sampling, environment noise,
and context draws use independent child streams, so swapping one algorithm
for another never perturbs the environment's randomness.
"""

from __future__ import annotations

import csv
import json
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import serialize
from .core import (DualVector, FrameworkConfig, Outcome, RoundRecord, Trace,
                   concentration_constant, eta_ogd, lagrangian)
from .dual import OgdDual
from .environments import (BaselineReport, ContextualEnv, ContextualInstance, InstanceSpec,
                           ScriptedEnv, ScriptedInstance, StochasticEnv, StochasticInstance,
                           baselines, instance_to_json, load_instance, make_env, make_example1,
                           make_lowerbound)
from .exp3six import Exp3Six
from .igw import IgwConfig, IgwDecision, default_igw_eta, igw_act
from .regression import (FiniteClassOracle, OracleErrorLedger, RidgeOracle,
                         finite_class_error_bound, ridge_error_bound)

__all__ = [
    "MetricsReport",
    "ScriptedPrimal",
    "ScriptedDual",
    "run_primal_dual",
    "run_contextual",
    "lazy_counterexample",
    "scripted_pair_regrets",
    "compute_metrics",
    "practical_dual_eta",
    "contextual_primal_bound",
    "builtin_instance",
    "SweepSpec",
    "sweep",
    "git_describe",
]


def practical_dual_eta(m: int, T: int) -> float:
    """Dual step size ``1/sqrt(m*T)`` for desk-scale experiments.

    The derived safe rate carries an 800x safety factor that keeps the dual
    player essentially frozen at horizons below ~1e10 rounds; this is the
    classical square-root rate that lets the multiplier actually move within
    a short run.  Pass it through ``FrameworkConfig.eta_ogd_override``.
    """
    return 1.0 / math.sqrt(m * T)


def contextual_primal_bound(K: int, T: int, delta: float, m: int, err_bar: float) -> float:
    """A-priori weakly adaptive regret bound for the contextual primal player."""
    return 504.0 * m * err_bar * math.log(T * T / delta) * math.sqrt(K * T)


class ScriptedPrimal:
    """Plays a fixed action schedule; probabilities are degenerate."""

    def __init__(self, actions: Sequence[int]):
        self.actions = [int(a) for a in actions]
        self._t = 0

    def sample(self, rng) -> tuple[int, float]:
        a = self.actions[self._t]
        return a, 1.0

    def update(self, arm: int, p_arm: float, utility: float) -> None:
        self._t += 1


class ScriptedDual:
    """Exposes a fixed multiplier schedule; ``step`` only advances the clock."""

    def __init__(self, schedule: Callable[[int], np.ndarray], m: int):
        self.schedule = schedule
        self.m = m
        self._t = 1

    def snapshot(self) -> DualVector:
        return DualVector(np.asarray(self.schedule(self._t), dtype=float))

    def step(self, g) -> None:
        self._t += 1


def _spawn_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def run_primal_dual(cfg: FrameworkConfig, env, primal=None, dual=None) -> Trace:
    """Finite-arm interaction loop; returns the full per-round trace.

    ``primal`` defaults to a fresh :class:`Exp3Six`; ``dual`` defaults to
    :class:`OgdDual` at the configured step size.  The primal's sampling at
    round t never sees the round-t multiplier.
    """
    if env.K != cfg.K or env.m != cfg.m:
        raise ValueError(f"environment ({env.K} arms, {env.m} constraints) does not match config "
                         f"({cfg.K}, {cfg.m})")
    if env.T < cfg.T:
        raise ValueError(f"environment horizon {env.T} shorter than configured T={cfg.T}")
    rng_primal, rng_env, _ = _spawn_streams(cfg.seed)
    if primal is None:
        primal = Exp3Six(cfg.K, cfg.T, cfg.delta)
    if dual is None:
        dual = OgdDual(cfg.m, cfg.dual_eta())
    eta = getattr(dual, "eta", cfg.dual_eta())

    records: list[RoundRecord] = []
    for t in range(1, cfg.T + 1):
        arm, p_arm = primal.sample(rng_primal)
        lam = dual.snapshot()
        outcome = env.outcome(t, arm, rng_env)
        utility = lagrangian(outcome.reward, outcome.costs, lam)
        primal.update(arm, p_arm, utility)
        dual.step(outcome.costs)
        records.append(RoundRecord(t=t, action=arm, lam=lam, outcome=outcome,
                                   primal_utility=utility, dual_gradient=outcome.costs))
    return Trace.from_records(records, dual.snapshot(), eta)


def _oracle_error_bound(oracle, T: int) -> float:
    if isinstance(oracle, RidgeOracle):
        return ridge_error_bound(oracle.dim, T, oracle.lambda_reg)
    if isinstance(oracle, FiniteClassOracle):
        return finite_class_error_bound(oracle.n)
    return 1.0


def run_contextual(cfg: FrameworkConfig, env: ContextualEnv, reward_oracle, cost_oracles,
                   igw_cfg: Optional[IgwConfig] = None, dual=None) -> Trace:
    """Contextual interaction loop with online regression oracles.

    Per round: observe the context, read the multiplier, act through
    inverse-gap weighting over the estimated payoff, observe the outcome,
    update every oracle with its own label, and step the dual.  The trace
    carries the oracle error ledger (errors vs. the true means and vs. the
    realized labels).
    """
    if env.K != cfg.K or env.m != cfg.m or len(cost_oracles) != cfg.m:
        raise ValueError("environment/oracle shapes do not match config")
    if env.T < cfg.T:
        raise ValueError(f"environment horizon {env.T} shorter than configured T={cfg.T}")
    rng_primal, rng_env, rng_ctx = _spawn_streams(cfg.seed)
    if igw_cfg is None:
        igw_cfg = IgwConfig(eta_p=default_igw_eta(cfg.K, cfg.T), K=cfg.K)
    if dual is None:
        eta = cfg.eta_ogd_override
        if eta is None:
            err_bar = max(_oracle_error_bound(o, cfg.T) for o in [reward_oracle, *cost_oracles])
            bound = cfg.primal_bound_estimate
            if bound is None:
                bound = contextual_primal_bound(cfg.K, cfg.T, cfg.delta, cfg.m, err_bar)
            eta = eta_ogd(cfg.m, bound, concentration_constant(cfg.T, cfg.delta))
        dual = OgdDual(cfg.m, eta)
    eta = getattr(dual, "eta", cfg.dual_eta())

    ledger = OracleErrorLedger(cfg.m)
    records: list[RoundRecord] = []
    for t in range(1, cfg.T + 1):
        z = env.context(t, rng_ctx)
        lam = dual.snapshot()
        decision: IgwDecision = igw_act(reward_oracle, cost_oracles, z, lam, igw_cfg, rng_primal)
        a = decision.action
        outcome = env.outcome(t, z, a, rng_env)
        utility = lagrangian(outcome.reward, outcome.costs, lam)

        fbar = env.mean_reward(z, a)
        gbar = env.mean_costs(z, a)
        fhat = float(decision.fhat[a])
        ghat = decision.ghat[a]
        ledger.add_reward((fhat - fbar) ** 2, (fhat - outcome.reward) ** 2)
        for i in range(cfg.m):
            ledger.add_cost(i, (ghat[i] - gbar[i]) ** 2, (ghat[i] - outcome.costs[i]) ** 2)
        lbar = lagrangian(fbar, gbar, lam)
        ledger.add_lagrangian((float(decision.lhat[a]) - lbar) ** 2)

        reward_oracle.update(z, a, outcome.reward)
        for i, oracle in enumerate(cost_oracles):
            oracle.update(z, a, float(outcome.costs[i]))
        dual.step(outcome.costs)
        records.append(RoundRecord(t=t, action=a, lam=lam, outcome=outcome,
                                   primal_utility=utility, dual_gradient=outcome.costs,
                                   context=z))
    return Trace.from_records(records, dual.snapshot(), eta, oracle_errors=ledger)


def lazy_counterexample(T: int, rho: float, M: float) -> Trace:
    """Run the proof-scripted lazy pair on the three-phase trap instance.

    The primal plays the first-third arm, then switches to the second-third
    arm for good; the dual stays at zero for two thirds and jumps to ``M``.
    Both players are no-regret bookkeeping-wise at ``M = 1/rho``, yet the
    realized violations are ``rho*T/3`` -- linear in the horizon.
    """
    if T % 3 != 0 or T <= 0:
        raise ValueError("T must be a positive multiple of 3")
    if M < 1.0 / rho:
        raise ValueError("M must be at least 1/rho")
    instance = make_example1(T, rho)
    env = ScriptedEnv(instance)
    third = T // 3
    actions = [2] * third + [1] * (2 * third)

    def schedule(t: int) -> np.ndarray:
        return np.array([0.0 if t <= 2 * third else M])

    cfg = FrameworkConfig(T=T, m=1, K=3, eta_ogd_override=None, seed=0)
    primal = ScriptedPrimal(actions)
    dual = ScriptedDual(schedule, m=1)
    return run_primal_dual(cfg, env, primal=primal, dual=dual)


def scripted_pair_regrets(trace: Trace, env: ScriptedEnv, dual_box: float) -> tuple[float, float]:
    """Exact full-horizon regrets of a (possibly scripted) pair on a scripted environment.

    Primal regret compares against the best fixed arm under the realized
    multiplier sequence; dual regret compares against the best fixed
    multiplier in the box ``[0, dual_box]^m`` (the dual utility is linear, so
    the box optimum sits at a corner, componentwise).
    """
    T, m = trace.T, trace.m
    lams = trace.lambdas()
    algo_utility = math.fsum(r.primal_utility for r in trace.records)
    best = -math.inf
    for arm in range(env.K):
        total = math.fsum(
            float(env.reward_row(t)[arm]) - float(np.dot(lams[t - 1], env.cost_table(t)[arm]))
            for t in range(1, T + 1)
        )
        best = max(best, total)
    primal_regret = best - algo_utility

    grads = trace.gradients()
    dual_regret = 0.0
    for i in range(m):
        coeff = math.fsum(grads[:, i])
        algo_term = math.fsum(lams[t, i] * grads[t, i] for t in range(T))
        dual_regret += max(dual_box * coeff, 0.0) - algo_term
    return primal_regret, dual_regret


@dataclass(frozen=True)
class MetricsReport:
    """Summary of one run against an instance's baselines."""

    rew: float
    violations: np.ndarray
    v_max: float
    opt_used: float
    regret_stoc: float
    competitive_gap: float
    max_dual_l1: float
    self_bound_ok: bool


SELF_BOUND_FACTOR = 13.0


def compute_metrics(trace: Trace, report: BaselineReport, m: int,
                    rho_choice: str = "stoc") -> MetricsReport:
    """Pure function of (trace, baselines); see :class:`MetricsReport`.

    ``rho_choice`` selects which feasibility margin feeds the multiplier
    bound ``13 m / rho`` and which benchmark is reported as ``opt_used``.
    """
    if rho_choice not in ("adv", "stoc"):
        raise ValueError("rho_choice must be 'adv' or 'stoc'")
    if trace.T == 0:
        return MetricsReport(0.0, np.zeros(m), 0.0, 0.0, 0.0, 0.0, 0.0, True)
    rho = report.rho_adv if rho_choice == "adv" else report.rho_stoc
    opt_used = report.opt_adv if rho_choice == "adv" else trace.T * report.opt_stoc
    v_max = trace.violation_max()
    regret_stoc = trace.T * report.opt_stoc - trace.cum_reward
    ratio = report.rho_adv / (1.0 + report.rho_adv)
    competitive_gap = ratio * report.opt_adv - trace.cum_reward
    self_ok = trace.max_dual_l1 <= SELF_BOUND_FACTOR * m / rho if rho > 0 else False
    return MetricsReport(
        rew=trace.cum_reward,
        violations=np.asarray(trace.cum_violations),
        v_max=v_max,
        opt_used=float(opt_used),
        regret_stoc=float(regret_stoc),
        competitive_gap=float(competitive_gap),
        max_dual_l1=trace.max_dual_l1,
        self_bound_ok=bool(self_ok),
    )


# ---------------------------------------------------------------------------
# named instances used by the experiment scripts and the CLI

STOC_K3M2_MEAN_REWARDS = (0.4, 0.4, 0.9)
STOC_K3M2_MEAN_COSTS = ((-0.5, 0.0), (0.0, -0.5), (0.5, 0.5))


def builtin_instance(name: str, T: int, rho: float = 0.5, delta_param: float = 0.2,
                     seed: int = 0) -> InstanceSpec:
    """Construct one of the named benchmark instances.

    ``example1``: the three-phase trap; ``lowerbound-a``/``lowerbound-b``:
    the two-instance indistinguishability pair; ``stoc-k3m2``: three arms,
    two constraints, feasibility margin exactly 1/4; ``twophase-k4``: a
    four-arm bandit whose best arm switches at midtime (costs are zero);
    ``ctx-linear``: a linear contextual instance (d=4, K=5, m=2) drawn from
    ``seed``.
    """
    if name == "example1":
        return make_example1(T, rho)
    if name in ("lowerbound-a", "lowerbound-b"):
        pair = make_lowerbound(T, rho, delta_param)
        return pair[0] if name.endswith("a") else pair[1]
    if name == "stoc-k3m2":
        return StochasticInstance(
            K=3, m=2, T=T,
            mean_rewards=np.array(STOC_K3M2_MEAN_REWARDS),
            mean_costs=np.array(STOC_K3M2_MEAN_COSTS),
        )
    if name == "twophase-k4":
        if T % 2 != 0:
            raise ValueError("T must be even for the two-phase instance")
        from .environments import Phase
        low = np.full(4, 0.1)
        r1, r2 = low.copy(), low.copy()
        r1[0] = 0.9
        r2[1] = 0.9
        zeros = np.zeros((4, 1))
        return ScriptedInstance(K=4, m=1, T=T, phases=(
            Phase(1, T // 2, r1, zeros), Phase(T // 2 + 1, T, r2, zeros)))
    if name == "ctx-linear":
        rng = np.random.default_rng(seed)
        d, K, m, n_ctx = 4, 5, 2, 8
        def unit(v):
            return v / max(1.0, float(np.linalg.norm(v)))
        theta_f = unit(rng.normal(size=d))
        theta_g = np.array([unit(rng.normal(size=d)) for _ in range(m)])
        raw = rng.normal(size=(n_ctx, K, d))
        feats = raw / np.maximum(np.linalg.norm(raw, axis=2, keepdims=True), 1e-12)
        return ContextualInstance(K=K, m=m, T=T, d=d, features=feats,
                                  theta_reward=theta_f, theta_costs=theta_g)
    raise ValueError(f"unknown builtin instance {name!r}")


# ---------------------------------------------------------------------------
# sweeps

def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


@dataclass
class SweepSpec:
    """One experiment grid: an instance family crossed with horizons and seeds."""

    name: str
    instance: str                    # builtin name or a path to an instance JSON file
    algo: str                        # exp3six | contextual | lazy
    T_values: list[int]
    seeds_per_cell: int
    rho: float = 0.5
    delta_param: float = 0.2
    delta: float = 0.05
    eta_rule: str = "paper"          # paper | practical, or a number via eta_override
    eta_override: Optional[float] = None
    lazy_multiplier: Optional[float] = None  # M for the lazy pair; defaults to 1/rho
    out_dir: str = "results"
    workers: int = 1
    instance_seed: int = 0

    @classmethod
    def from_json(cls, doc: dict) -> "SweepSpec":
        fields = {k: doc[k] for k in doc if k in cls.__dataclass_fields__}
        return cls(**fields)


def _resolve_eta(spec: SweepSpec, m: int, T: int) -> Optional[float]:
    if spec.eta_override is not None:
        return spec.eta_override
    if spec.eta_rule == "practical":
        return practical_dual_eta(m, T)
    if spec.eta_rule == "paper":
        return None
    raise ValueError(f"unknown eta rule {spec.eta_rule!r}")


def _sweep_cell(args) -> dict:
    spec, T, seed = args
    try:
        if os.path.exists(spec.instance):
            instance = load_instance(spec.instance)
            if instance.T != T:
                raise ValueError(f"instance file horizon {instance.T} != requested T {T}")
        else:
            instance = builtin_instance(spec.instance, T, rho=spec.rho,
                                        delta_param=spec.delta_param, seed=spec.instance_seed)
        report = baselines(instance)
        if spec.algo == "lazy":
            M = spec.lazy_multiplier if spec.lazy_multiplier is not None else 1.0 / spec.rho
            trace = lazy_counterexample(T, spec.rho, M)
            rho_choice = "adv"
        elif spec.algo == "contextual":
            if not isinstance(instance, ContextualInstance):
                raise ValueError("contextual algo needs a contextual instance")
            cfg = FrameworkConfig(T=T, m=instance.m, K=instance.K, delta=spec.delta,
                                  eta_ogd_override=_resolve_eta(spec, instance.m, T), seed=seed)
            env = ContextualEnv(instance)
            oracles = [RidgeOracle(instance.d, feature_map=env.feature,
                                   target_range=(0.0, 1.0) if i == 0 else (-1.0, 1.0))
                       for i in range(instance.m + 1)]
            trace = run_contextual(cfg, env, oracles[0], oracles[1:])
            rho_choice = "stoc"
        elif spec.algo == "exp3six":
            cfg = FrameworkConfig(T=T, m=instance.m, K=instance.K, delta=spec.delta,
                                  eta_ogd_override=_resolve_eta(spec, instance.m, T), seed=seed)
            trace = run_primal_dual(cfg, make_env(instance))
            rho_choice = "stoc" if isinstance(instance, StochasticInstance) else "adv"
        else:
            raise ValueError(f"unknown algo {spec.algo!r}")
        metrics = compute_metrics(trace, report, instance.m, rho_choice)
        return {
            "sweep": spec.name, "algo": spec.algo, "instance": spec.instance,
            "T": T, "seed": seed, "eta_dual": trace.dual_eta,
            "rew": metrics.rew, "v_max": metrics.v_max,
            "violations": metrics.violations.tolist(),
            "max_dual_l1": metrics.max_dual_l1,
            "self_bound_ok": metrics.self_bound_ok,
            "regret_stoc": metrics.regret_stoc,
            "competitive_gap": metrics.competitive_gap,
            "opt_adv": report.opt_adv, "opt_stoc": report.opt_stoc,
            "rho_adv": report.rho_adv, "rho_stoc": report.rho_stoc,
        }
    except Exception as exc:  # noqa: BLE001 - a failed cell must not sink the sweep
        return {"sweep": spec.name, "algo": spec.algo, "instance": spec.instance,
                "T": T, "seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def sweep(spec: SweepSpec) -> tuple[str, str]:
    """Run every (T, seed) cell; returns (jsonl path, csv path).

    One JSON-lines record per run (appended in grid order regardless of
    worker scheduling), then a CSV with per-horizon mean/stddev of reward,
    max violation, and max multiplier norm.  Failed cells are recorded with
    an ``error`` field and skipped in the summary.
    """
    os.makedirs(spec.out_dir, exist_ok=True)
    cells = [(spec, T, seed) for T in spec.T_values for seed in range(spec.seeds_per_cell)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(cell) for cell in cells]

    meta = {"git": git_describe(), "spec": {k: getattr(spec, k) for k in spec.__dataclass_fields__}}
    jsonl_path = os.path.join(spec.out_dir, f"{spec.name}.jsonl")
    with open(jsonl_path, "w") as fh:
        fh.write(serialize.dumps({"sweep": spec.name, "meta": meta}) + "\n")
        for row in rows:
            fh.write(serialize.dumps(row) + "\n")

    csv_path = os.path.join(spec.out_dir, f"{spec.name}.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "n_runs", "rew_mean", "rew_std", "v_max_mean", "v_max_std",
                         "max_dual_l1_mean", "max_dual_l1_std"])
        for T in spec.T_values:
            good = [r for r in rows if r["T"] == T and "error" not in r]
            if not good:
                writer.writerow([T, 0] + ["nan"] * 6)
                continue
            cols = [[r["rew"] for r in good], [r["v_max"] for r in good],
                    [r["max_dual_l1"] for r in good]]
            stats = []
            for vals in cols:
                stats += [float(np.mean(vals)), float(np.std(vals))]
            writer.writerow([T, len(good)] + [serialize.format_float(v) for v in stats])
    return jsonl_path, csv_path


def trace_to_jsonl(trace: Trace, path: str, full: bool = False, header: Optional[dict] = None) -> None:
    """Write a run trace: a summary record, then (optionally) one record per round."""
    with open(path, "w") as fh:
        summary = {
            "type": "summary",
            "T": trace.T, "m": trace.m,
            "cum_reward": trace.cum_reward,
            "cum_violations": trace.cum_violations.tolist(),
            "max_dual_l1": trace.max_dual_l1,
            "utility_range": trace.utility_range,
            "dual_eta": trace.dual_eta,
        }
        if header:
            summary.update(header)
        fh.write(serialize.dumps(summary) + "\n")
        if full:
            for r in trace.records:
                row = {
                    "type": "round", "t": r.t, "action": r.action,
                    "lambda": r.lam.components.tolist(),
                    "reward": r.outcome.reward,
                    "costs": r.outcome.costs.tolist(),
                    "primal_utility": r.primal_utility,
                }
                if r.context is not None:
                    row["context"] = r.context
                fh.write(serialize.dumps(row) + "\n")
