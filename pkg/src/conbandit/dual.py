"""Dual player: projected gradient ascent on the nonnegative orthant, no upper box.

The step size is constant over a run.  Boundedness of the multipliers is a
property to be *observed* (and audited), never enforced: there is
deliberately no projection onto a bounded set, because the framework's
guarantees rest on the multipliers staying small by themselves.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DualVector, Trace

__all__ = ["OgdDual", "audit_dual_link", "LINK_AUDIT_TOL"]

# Absolute slack absorbing float roundoff when the link inequality is tight
# (it holds with equality whenever the multiplier never hits zero).
LINK_AUDIT_TOL = 1e-9


class OgdDual:
    """Gradient ascent on linear dual utilities, clipped at zero componentwise.

    Starts at the zero vector.  Each observed cost vector ``g`` (entries in
    [-1, 1]) triggers the update ``lam_i <- max(0, lam_i + eta * g_i)``;
    because the dual utility is linear in the multiplier, this single step is
    exact ascent.
    """

    def __init__(self, m: int, eta: float):
        if m < 1:
            raise ValueError("m must be >= 1")
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.m = m
        self.eta = float(eta)
        self.lam = np.zeros(m)

    def snapshot(self) -> DualVector:
        return DualVector(self.lam)

    def step(self, g) -> None:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.m,):
            raise ValueError(f"gradient shape {g.shape} does not match m={self.m}")
        if np.max(np.abs(g)) > 1.0:
            raise ValueError("cost components must lie in [-1, 1]")
        self.lam = np.maximum(0.0, self.lam + self.eta * g)


def dual_init(m: int, eta: float) -> OgdDual:
    """Fresh dual player at the zero vector."""
    return OgdDual(m, eta)


def dual_step(state: OgdDual, g_observed) -> OgdDual:
    """Functional wrapper around :meth:`OgdDual.step` returning a new state."""
    out = OgdDual(state.m, state.eta)
    out.lam = state.lam.copy()
    out.step(g_observed)
    return out


def audit_dual_link(trace: Trace, eta: float, tol: float = LINK_AUDIT_TOL) -> np.ndarray:
    """Check, per constraint, that every prefix of realized costs is dominated by the multiplier.

    The unprojected part of the update gives ``lam_{t+1,i} >= lam_{t,i} + eta*g_{t,i}``,
    so by induction from the zero start every prefix sum of observed costs
    satisfies ``sum_{s<=t} g_{s,i} <= lam_{t+1,i} / eta``.  Returns one boolean
    per constraint: True iff the inequality held (within ``tol``) at every
    prefix.  A trace produced by :class:`OgdDual` dynamics must come back
    all-True; an edited trace generally will not.
    """
    m = trace.m
    ok = np.ones(m, dtype=bool)
    if trace.T == 0:
        return ok
    lams = trace.lambdas()
    grads = trace.gradients()
    # multiplier *after* round t: next record's snapshot, final one for the last round
    lam_next = np.vstack([lams[1:], trace.lam_final.components[None, :]])
    for i in range(m):
        running = 0.0
        comp = 0.0  # Neumaier compensation
        for t in range(trace.T):
            x = grads[t, i]
            s = running + x
            if abs(running) >= abs(x):
                comp += (running - s) + x
            else:
                comp += (x - s) + running
            running = s
            if running + comp > lam_next[t, i] / eta + tol:
                ok[i] = False
                break
    return ok


def drift_violations(trace: Trace, eta: float, tol: float = 1e-9) -> int:
    """Count steps where the multiplier's l1 norm moved by more than ``m * eta``.

    Zero for any trace generated by :class:`OgdDual`, since each component
    moves by at most ``eta`` per step.  ``tol`` absorbs float roundoff only.
    """
    if trace.T == 0:
        return 0
    lams = trace.lambdas()
    l1s = np.abs(lams).sum(axis=1)
    l1s = np.append(l1s, trace.lam_final.l1())
    bound = trace.m * eta + tol
    return int(np.sum(np.abs(np.diff(l1s)) > bound))


def interval_regret_bound_holds(lams: np.ndarray, grads: np.ndarray, comparator: np.ndarray,
                                t1: int, t2: int, eta: float, horizon: int) -> bool:
    """Evaluate the fixed-comparator interval regret inequality on recorded iterates.

    For the inclusive window ``[t1, t2]`` (0-indexed) and any fixed nonnegative
    comparator ``lam``:

        sum_t <lam - lam_t, g_t>  <=  ||lam - lam_{t1}||_2^2 / (2 eta) + eta * m * horizon / 2

    which holds deterministically for iterates produced by :class:`OgdDual`.
    """
    m = lams.shape[1]
    lhs = math.fsum(float(np.dot(comparator - lams[t], grads[t])) for t in range(t1, t2 + 1))
    rhs = float(np.sum((comparator - lams[t1]) ** 2)) / (2.0 * eta) + 0.5 * eta * m * horizon
    return lhs <= rhs
