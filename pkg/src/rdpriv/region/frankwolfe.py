"""Frank-Wolfe over {row-stochastic W : sum_e p_e W[e] . cost[e] <= D}.

The linear minimization oracle is exact: one coupling constraint means the
optimum sits at a vertex where every row is deterministic except at most one
row split between two reproduction symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .params import InfeasibleError

_FEAS = 1e-12


def _select(g: np.ndarray, c: np.ndarray, mu: float) -> np.ndarray:
    """Per-row argmin of g + mu*c, ties broken toward lower cost."""
    score = g + mu * c
    best = score.min(axis=1, keepdims=True)
    tied = score <= best + 1e-14 * (1.0 + np.abs(best))
    masked = np.where(tied, c, np.inf)
    return masked.argmin(axis=1)


def lmo(g: np.ndarray, c: np.ndarray, budget: float) -> np.ndarray:
    """argmin <g, W> over row-stochastic W with <c, W> <= budget.

    ``c[e, b]`` already includes the weight ``p_e``.
    """
    n_e, n_b = g.shape
    rows = np.arange(n_e)
    c_min = c.min(axis=1).sum()
    if budget < c_min - _FEAS:
        raise InfeasibleError(f"distortion budget {budget:.6g} below minimum {c_min:.6g}")
    pick = _select(g, c, 0.0)
    if c[rows, pick].sum() <= budget + _FEAS:
        v = np.zeros_like(g)
        v[rows, pick] = 1.0
        return v

    # breakpoints where a row's choice moves to a cheaper symbol
    cand = []
    for e in range(n_e):
        dc = c[e][:, None] - c[e][None, :]        # c[b] - c[b']
        dg = g[e][None, :] - g[e][:, None]        # g[b'] - g[b]
        ok = dc > 0
        mu = dg[ok] / dc[ok]
        cand.append(mu[mu > 0])
    mus = np.unique(np.concatenate(cand)) if cand else np.array([])
    if mus.size == 0:
        mus = np.array([1.0])

    def cost_at(mu):
        return c[rows, _select(g, c, mu)].sum()

    lo, hi = 0, mus.size - 1
    if cost_at(mus[hi]) > budget + _FEAS:
        # only reachable through float ties; take the cheapest selection
        mus = np.append(mus, mus[-1] * 2 + 1)
        hi = mus.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cost_at(mus[mid]) <= budget + _FEAS:
            hi = mid
        else:
            lo = mid + 1
    mu_star = mus[lo]
    prev = mus[lo - 1] if lo > 0 else 0.0
    nxt = mus[lo + 1] if lo + 1 < mus.size else 2 * mu_star + 1
    expensive = _select(g, c, 0.5 * (prev + mu_star))
    cheap = _select(g, c, 0.5 * (mu_star + nxt))

    choice = expensive.copy()
    total = c[rows, choice].sum()
    v = np.zeros_like(g)
    for e in range(n_e):
        if choice[e] == cheap[e]:
            continue
        saving = c[e, choice[e]] - c[e, cheap[e]]
        if total - saving <= budget:
            theta = (total - budget) / saving if saving > 0 else 0.0
            theta = min(max(theta, 0.0), 1.0)
            v[rows, choice] = 1.0
            v[e, :] = 0.0
            v[e, cheap[e]] += theta
            v[e, choice[e]] += 1.0 - theta
            return v
        total -= saving
        choice[e] = cheap[e]
    v[rows, choice] = 1.0
    return v


@dataclass
class FWResult:
    channel: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool
    status: str


STALL_GAP = 1e-6


def _correct(objective, atoms: list[np.ndarray], alpha: np.ndarray) -> np.ndarray:
    """Re-optimize the convex weights over the current active set."""
    if len(atoms) == 1:
        return np.ones(1)
    v = np.stack(atoms)

    def fun(a):
        return objective.value(np.tensordot(a, v, 1))

    def jac(a):
        g = objective.grad(np.tensordot(a, v, 1))
        return np.tensordot(v, g, ([1, 2], [0, 1]))

    res = minimize(fun, alpha, jac=jac, method="SLSQP",
                   bounds=[(0.0, 1.0)] * len(atoms),
                   constraints=[{"type": "eq", "fun": lambda a: a.sum() - 1.0,
                                 "jac": lambda a: np.ones_like(a)}],
                   options={"ftol": 1e-16, "maxiter": 500})
    a = np.clip(res.x, 0.0, None)
    a /= a.sum()
    return a if fun(a) <= fun(alpha) else alpha


def fully_corrective_fw(objective, c: np.ndarray, budget: float, start: np.ndarray,
                        tol: float, max_iters: int, stall_iters: int = 4) -> FWResult:
    """Minimize a smooth convex ``objective`` over the distortion polytope.

    Each iteration adds the LMO vertex to the active set and re-optimizes the
    weights of all active atoms, which subsumes away steps. Stops when the
    duality gap drops below ``tol``, or when the value stops moving and the
    gap is below ``STALL_GAP`` (the gap of an entropy objective shrinks only
    like the square root of the value error, so float64 can stall it).
    """
    atoms = [np.array(start, dtype=float)]
    alpha = np.ones(1)
    x = atoms[0]
    value = objective.value(x)
    gap = np.inf
    flat = 0
    status = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        g = objective.grad(x)
        s = lmo(g, c, budget)
        gap = float((g * (x - s)).sum())
        if gap <= tol:
            status = "converged"
            break
        if flat >= stall_iters:
            status = "stalled" if gap <= STALL_GAP else "max_iters"
            break
        if not any(np.array_equal(s, a) for a in atoms):
            atoms.append(s)
            alpha = np.append(alpha, 0.0)
        alpha = _correct(objective, atoms, alpha)
        keep = alpha > 1e-15
        atoms = [a for a, k in zip(atoms, keep) if k]
        alpha = alpha[keep] / alpha[keep].sum()
        x = np.tensordot(alpha, np.stack(atoms), 1)
        new = objective.value(x)
        flat = flat + 1 if value - new <= 1e-15 * (1.0 + abs(value)) else 0
        value = min(value, new)
    return FWResult(x, objective.value(x), gap, it, status in ("converged", "stalled"), status)
