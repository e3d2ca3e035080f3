"""Dense two-phase simplex with Bland's rule, sized for tiny benchmark LPs.

Problem sizes here are a handful of variables (arms) and at most a few
thousand rows (one per scripted phase and constraint), so there is no sparse
machinery and no effort at large-scale pivoting heuristics.  Bland's rule
guarantees termination; a vertex solution comes out of the final basis.
"""

from __future__ import annotations

import numpy as np

__all__ = ["InfeasibleError", "solve_lp", "minimax_mixture", "simplex_core"]

_PIV_TOL = 1e-9


class InfeasibleError(RuntimeError):
    """No point satisfies the constraint system (the instance has no safe mixture)."""


def _reduce_cost_row(table: np.ndarray, rhs: np.ndarray, basis: list[int], c: np.ndarray):
    cost = c.astype(float).copy()
    value = 0.0
    for r, b in enumerate(basis):
        f = cost[b]
        if f != 0.0:
            cost -= f * table[r]
            value += f * rhs[r]
    return cost, value


def _run_phase(table: np.ndarray, rhs: np.ndarray, basis: list[int], cost: np.ndarray,
               value: float, allowed: int) -> float:
    """Pivot to optimality (maximization) over columns < ``allowed``, Bland's rule."""
    p = table.shape[0]
    while True:
        col = -1
        for j in range(allowed):
            if cost[j] > _PIV_TOL:
                col = j
                break
        if col < 0:
            return value
        best = np.inf
        for r in range(p):
            a = table[r, col]
            if a > _PIV_TOL:
                best = min(best, rhs[r] / a)
        if not np.isfinite(best):
            raise RuntimeError("LP is unbounded")
        row = -1
        for r in range(p):
            a = table[r, col]
            if a > _PIV_TOL and rhs[r] / a <= best + _PIV_TOL:
                if row < 0 or basis[r] < basis[row]:
                    row = r
        _pivot(table, rhs, basis, row, col)
        f = cost[col]
        cost -= f * table[row]
        value += f * rhs[row]


def _pivot(table, rhs, basis, row, col):
    piv = table[row, col]
    table[row] /= piv
    rhs[row] /= piv
    for r in range(table.shape[0]):
        if r != row:
            f = table[r, col]
            if f != 0.0:
                table[r] -= f * table[row]
                rhs[r] -= f * rhs[row]
    basis[row] = col


def simplex_core(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None):
    """Maximize ``c @ x`` over ``{x >= 0, A_ub x <= b_ub, A_eq x = b_eq}``.

    Returns ``(x, value)`` at an optimal vertex.  Raises
    :class:`InfeasibleError` when the system admits no solution and
    ``RuntimeError`` when the objective is unbounded.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    p_ub, p_eq = A_ub.shape[0], A_eq.shape[0]
    p = p_ub + p_eq

    # Standard form: structural vars, one slack per <= row, artificials as needed.
    n_slack = p_ub
    rows = np.hstack([np.vstack([A_ub, A_eq]), np.vstack([np.eye(p_ub), np.zeros((p_eq, p_ub))])])
    rhs = np.concatenate([b_ub, b_eq])
    # Nonnegative RHS everywhere (flips the slack sign on negated <= rows).
    for r in range(p):
        if rhs[r] < 0.0:
            rows[r] = -rows[r]
            rhs[r] = -rhs[r]
    needs_art = [r for r in range(p) if r >= p_ub or rows[r, n + r] < 0.0]
    n_art = len(needs_art)
    table = np.hstack([rows, np.zeros((p, n_art))])
    basis = [-1] * p
    for k, r in enumerate(needs_art):
        table[r, n + n_slack + k] = 1.0
        basis[r] = n + n_slack + k
    for r in range(p):
        if basis[r] < 0:
            basis[r] = n + r  # slack with +1 coefficient

    n_total = n + n_slack + n_art
    if n_art:
        c1 = np.zeros(n_total)
        c1[n + n_slack:] = -1.0
        cost, value = _reduce_cost_row(table, rhs, basis, c1)
        value = _run_phase(table, rhs, basis, cost, value, n_total)
        if value < -1e-7:
            raise InfeasibleError(f"constraint system infeasible (phase-1 residual {-value:.3e})")
        # Drive leftover artificials out of the basis; drop genuinely redundant rows.
        keep = []
        for r in range(p):
            if basis[r] >= n + n_slack:
                col = next((j for j in range(n + n_slack) if abs(table[r, j]) > _PIV_TOL), -1)
                if col < 0:
                    continue  # redundant row
                _pivot(table, rhs, basis, r, col)
            keep.append(r)
        table = table[keep, :][:, : n + n_slack]
        rhs = rhs[keep]
        basis = [basis[r] for r in keep]
    else:
        table = table[:, : n + n_slack]

    cost, value = _reduce_cost_row(table, rhs, basis, c=np.concatenate([c, np.zeros(n_slack)]))
    value = _run_phase(table, rhs, basis, cost, value, n + n_slack)
    x = np.zeros(n)
    for r, b in enumerate(basis):
        if b < n:
            x[b] = rhs[r]
    return x, float(value)


def solve_lp(c, A=None, b=None):
    """Maximize ``c @ x`` over the probability simplex intersected with ``A x <= b``.

    Returns ``(x, value)`` at an optimal vertex.  Infeasibility means no
    mixture over the arms satisfies the side constraints.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if n < 1:
        raise ValueError("need at least one variable")
    x, value = simplex_core(c, A_ub=A, b_ub=b, A_eq=np.ones((1, n)), b_eq=np.ones(1))
    return x, value


def minimax_mixture(rows):
    """Minimize, over the probability simplex, the maximum of ``row @ xi`` across rows.

    Returns ``(xi, s)`` with ``s = min_xi max_r row_r @ xi``.  Solved as an
    epigraph LP; the epigraph variable is shifted positive so every variable
    stays in the nonnegative orthant the simplex core works over.
    """
    R = np.asarray(rows, dtype=float)
    if R.ndim != 2 or R.shape[0] < 1:
        raise ValueError("need a nonempty 2-d row matrix")
    p, n = R.shape
    shift = 1.0 + float(np.max(np.abs(R))) if R.size else 1.0
    # vars: (xi_1..xi_n, u) with u = s + shift >= 0; constraints R xi - u <= -shift
    c = np.zeros(n + 1)
    c[n] = -1.0
    A_ub = np.hstack([R, -np.ones((p, 1))])
    b_ub = -shift * np.ones(p)
    A_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    x, value = simplex_core(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(1))
    xi = x[:n]
    # evaluate the achieved value on the original rows rather than unshifting
    # the epigraph variable: the vertex solution is exact, the shift is not
    s = float(np.max(R @ xi))
    return xi, s
