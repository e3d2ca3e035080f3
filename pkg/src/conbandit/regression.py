"""Online regression oracles for the contextual loop: a finite-class
aggregating forecaster and a forward-regularized ridge forecaster, plus the
error bookkeeping that ties their accuracy to the combined payoff estimate.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "FiniteClassOracle",
    "RidgeOracle",
    "OracleErrorLedger",
    "lagrangian_error_bound_check",
    "finite_class_error_bound",
    "ridge_error_bound",
]

REWARD_RANGE = (0.0, 1.0)
COST_RANGE = (-1.0, 1.0)


class FiniteClassOracle:
    """Exponentially weighted mean forecaster over a finite candidate class.

    Predicts the weight-averaged value of the candidates and decays each
    candidate's weight by ``exp(-eta_v * square error)`` after the label
    arrives.  ``eta_v = 1/2`` is the largest rate for which the square loss
    on a unit range is exp-concave, so predicting the weighted mean already
    achieves the log-cardinality regret; no substitution function is needed.
    """

    def __init__(self, functions: Sequence[Callable[[int, int], float]], eta_v: float = 0.5,
                 target_range: tuple[float, float] = REWARD_RANGE):
        if not functions:
            raise ValueError("need at least one candidate function")
        self.functions = list(functions)
        self.eta_v = float(eta_v)
        self.target_range = target_range
        self.weights = np.full(len(self.functions), 1.0 / len(self.functions))

    @property
    def n(self) -> int:
        return len(self.functions)

    def _values(self, z: int, a: int) -> np.ndarray:
        return np.array([f(z, a) for f in self.functions], dtype=float)

    def predict(self, z: int, a: int) -> float:
        lo, hi = self.target_range
        return float(np.clip(np.dot(self.weights, self._values(z, a)), lo, hi))

    def update(self, z: int, a: int, y: float) -> None:
        lo, hi = self.target_range
        if not (lo <= y <= hi):
            raise ValueError(f"label {y} outside target range [{lo}, {hi}]")
        losses = (self._values(z, a) - y) ** 2
        self.weights = self.weights * np.exp(-self.eta_v * (losses - losses.min()))
        self.weights /= self.weights.sum()

    @classmethod
    def from_tables(cls, tables: np.ndarray, **kwargs) -> "FiniteClassOracle":
        """Candidates given as an (N, n_contexts, K) value array."""
        tables = np.asarray(tables, dtype=float)
        funcs = [
            (lambda z, a, _tab=tables[i]: float(_tab[z, a]))
            for i in range(tables.shape[0])
        ]
        return cls(funcs, **kwargs)


class RidgeOracle:
    """Forward-regularized online least squares over a known feature map.

    The prediction at feature ``x`` folds the incoming point into the Gram
    matrix before solving, i.e. ``yhat = x' (G + x x')^{-1} b``, which closes
    to ``(x' G^{-1} b) / (1 + x' G^{-1} x)``.  The inverse is maintained by
    rank-one updates; the Gram matrix itself is kept as the ground truth and
    used to refresh the inverse periodically.
    """

    _REFRESH_EVERY = 4096

    def __init__(self, dim: int, lambda_reg: float = 1.0,
                 target_range: tuple[float, float] = COST_RANGE,
                 feature_map: Optional[Callable[[int, int], np.ndarray]] = None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if lambda_reg <= 0.0:
            raise ValueError("lambda_reg must be positive")
        self.dim = dim
        self.lambda_reg = float(lambda_reg)
        self.target_range = target_range
        self.feature_map = feature_map
        self.gram = lambda_reg * np.eye(dim)
        self.moment = np.zeros(dim)
        self._inv = np.eye(dim) / lambda_reg
        self._updates = 0

    def predict_feature(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) > 1.0 + 1e-9:
            raise ValueError("feature vectors must have l2 norm <= 1")
        invx = self._inv @ x
        yhat = float(np.dot(invx, self.moment) / (1.0 + np.dot(x, invx)))
        lo, hi = self.target_range
        return float(np.clip(yhat, lo, hi))

    def update_feature(self, x, y: float) -> None:
        x = np.asarray(x, dtype=float)
        lo, hi = self.target_range
        if not (lo <= y <= hi):
            raise ValueError(f"label {y} outside target range [{lo}, {hi}]")
        self.gram = self.gram + np.outer(x, x)
        self.moment = self.moment + y * x
        invx = self._inv @ x
        self._inv = self._inv - np.outer(invx, invx) / (1.0 + np.dot(x, invx))
        self._updates += 1
        if self._updates % self._REFRESH_EVERY == 0:
            self._inv = np.linalg.inv(self.gram)

    def predict(self, z: int, a: int) -> float:
        return self.predict_feature(self._feature(z, a))

    def update(self, z: int, a: int, y: float) -> None:
        self.update_feature(self._feature(z, a), y)

    def _feature(self, z: int, a: int) -> np.ndarray:
        if self.feature_map is None:
            raise ValueError("this oracle was built without a feature map")
        return self.feature_map(z, a)


class OracleErrorLedger:
    """Running squared-error totals for the oracles driving a contextual run.

    ``*_truth`` entries accumulate errors against the environment's mean
    functions (measurable only in simulation); ``*_label`` entries accumulate
    errors against the realized noisy labels (a diagnostic).  Totals never
    decrease.
    """

    def __init__(self, m: int):
        self.m = m
        self.reward_truth = 0.0
        self.reward_label = 0.0
        self.cost_truth = np.zeros(m)
        self.cost_label = np.zeros(m)
        self.lagrangian_truth = 0.0

    def add_reward(self, err_truth_sq: float, err_label_sq: float) -> None:
        self._check(err_truth_sq, err_label_sq)
        self.reward_truth += err_truth_sq
        self.reward_label += err_label_sq

    def add_cost(self, i: int, err_truth_sq: float, err_label_sq: float) -> None:
        self._check(err_truth_sq, err_label_sq)
        self.cost_truth[i] += err_truth_sq
        self.cost_label[i] += err_label_sq

    def add_lagrangian(self, err_truth_sq: float) -> None:
        self._check(err_truth_sq)
        self.lagrangian_truth += err_truth_sq

    @staticmethod
    def _check(*vals: float) -> None:
        for v in vals:
            if v < 0.0 or not math.isfinite(v):
                raise ValueError(f"squared errors must be finite and >= 0, got {v}")


def lagrangian_error_bound_check(err_f: float, err_costs, max_dual_l1: float, err_L: float) -> bool:
    """True iff the combined-estimate error is within its decomposition bound.

    The payoff estimate built from a reward oracle and per-constraint cost
    oracles under multipliers of l1 norm at most ``M`` satisfies

        err_L <= 2 * err_f + 2 * M^2 * sum_i err_costs[i]

    (boundary inclusive).  Every contextual run must pass this check.
    """
    err_costs = np.asarray(err_costs, dtype=float)
    if err_f < 0.0 or err_L < 0.0 or np.any(err_costs < 0.0) or max_dual_l1 < 0.0:
        raise ValueError("errors and the multiplier bound must be >= 0")
    bound = 2.0 * err_f + 2.0 * max_dual_l1 ** 2 * float(np.sum(err_costs))
    return err_L <= bound


def finite_class_error_bound(n_functions: int) -> float:
    """A-priori squared-error bound for the aggregating forecaster: ``2 ln N``."""
    if n_functions < 1:
        raise ValueError("need at least one candidate")
    return 2.0 * math.log(max(n_functions, 2))


def ridge_error_bound(dim: int, T: int, lambda_reg: float = 1.0) -> float:
    """A-priori squared-error bound for the ridge forecaster on unit-ball data."""
    if dim < 1 or T < 1:
        raise ValueError("need dim >= 1 and T >= 1")
    return lambda_reg + dim * math.log(1.0 + T / (dim * lambda_reg))
