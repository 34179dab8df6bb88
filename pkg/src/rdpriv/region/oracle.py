"""Exhaustive grid search over discretized test channels.

Used as an independent reference for the convex solvers, so it shares no
objective code with them: information quantities are evaluated here from
scratch, vectorized over every grid channel at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from ..model import CaseArrays, EncodedSet, SourceModel
from ..probcore import BudgetError as _BudgetError

GRID_BUDGET = 10**8
TIE = 1e-12
_CHUNK = 1 << 18


class BudgetError(_BudgetError):
    def __init__(self, needed: float, budget: int = GRID_BUDGET):
        super().__init__(f"grid needs about {needed:.3g} channels, budget is {budget:.3g}",
                         needed, budget)


def grid_size_estimate(n_e: int, n_b: int, step: float) -> float:
    return float((1.0 / step + 1.0) ** (n_e * (n_b - 1)))


def simplex_grid(n_b: int, step: float) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``step``, lexicographic."""
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"1/step must be an integer, got step={step}")
    pts = []
    # stars and bars; sorting afterwards gives lexicographic order
    for bars in combinations(range(m + n_b - 1), n_b - 1):
        edges = (-1,) + bars + (m + n_b - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(n_b)])
    pts = np.array(sorted(pts), dtype=float) / m
    return pts


def _plogq(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise p*log2(p/q) with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p * np.log2(p / q)
    return np.where(p > 0, out, 0.0)


def _mi(joint: np.ndarray, px: np.ndarray) -> np.ndarray:
    """I(X; Y) for a batch of joints ``joint[..., x, y]`` with fixed marginal ``px``."""
    py = joint.sum(axis=-2, keepdims=True)
    return np.maximum(_plogq(joint, px[:, None] * py).sum(axis=(-2, -1)), 0.0)


@dataclass(frozen=True)
class OracleResult:
    leakage: float
    rate: float
    channel: np.ndarray
    bound: float
    bound_a_priori: float
    bound_a_posteriori: float
    count: int


class GridTable:
    """Leakage, rate and distortion of every grid channel for one case."""

    def __init__(self, case: CaseArrays, step: float, budget: int = GRID_BUDGET):
        need = grid_size_estimate(case.n_e, case.n_b, step)
        if need > budget:
            raise BudgetError(need, budget)
        self.case = case
        self.step = step
        self.rows = simplex_grid(case.n_b, step)
        g, n_e = len(self.rows), case.n_e
        self.count = g ** n_e
        self.leak = np.empty(self.count)
        self.rate = np.empty(self.count)
        self.dist = np.empty(self.count)
        p_h = case.p_eh.sum(axis=0)
        # per (row e, grid point i) contributions, summed over rows
        contrib_h = case.p_eh[:, None, :, None] * self.rows[None, :, None, :]   # e,i,h,b
        row_cost = (case.p_e[:, None] * (self.rows @ case.cost.T).T)            # e,i
        for lo in range(0, self.count, _CHUNK):
            idx = np.arange(lo, min(lo + _CHUNK, self.count))
            digits = self._digits(idx)                                          # n, e
            joint_h = np.zeros((idx.size, case.n_h, case.n_b))
            joint_e = np.empty((idx.size, n_e, case.n_b))
            dist = np.zeros(idx.size)
            for e in range(n_e):
                joint_h += contrib_h[e, digits[:, e]]
                joint_e[:, e, :] = case.p_e[e] * self.rows[digits[:, e]]
                dist += row_cost[e, digits[:, e]]
            self.leak[idx] = _mi(joint_h, p_h)
            self.rate[idx] = _mi(joint_e, case.p_e)
            self.dist[idx] = dist

    def _digits(self, idx: np.ndarray) -> np.ndarray:
        g, n_e = len(self.rows), self.case.n_e
        out = np.empty((idx.size, n_e), dtype=np.int64)
        rest = idx.copy()
        for e in range(n_e - 1, -1, -1):
            out[:, e] = rest % g
            rest //= g
        return out

    def channel(self, index: int) -> np.ndarray:
        return self.rows[self._digits(np.array([index]))[0]]

    def solve(self, D: float) -> OracleResult:
        feas = np.flatnonzero(self.dist <= D + TIE)
        if feas.size == 0:
            raise ValueError(f"no grid channel has distortion <= {D:.6g}")
        leak = self.leak[feas]
        lmin = leak.min()
        tied = feas[leak <= lmin + TIE]
        # lowest rate, then lexicographically smallest channel (= smallest index)
        best = tied[np.lexsort((tied, self.rate[tied]))[0]]
        w = self.channel(best)
        prior = a_priori_bound(self.case, D, self.step)
        post = a_posteriori_bound(self.case, w, D)
        return OracleResult(float(self.leak[best]), float(self.rate[best]), w,
                            min(prior, post), prior, post, int(self.count))


def _omega(x: float, m: int) -> float:
    return 0.0 if x <= 0 else float(-x * np.log2(x / m))


def a_priori_bound(case: CaseArrays, D: float, step: float) -> float:
    """How far the grid optimum can sit above the true minimum leakage.

    Round the true optimum to the grid (per-row variational distance at
    most ``eta``), then mix in the minimum-cost channel to restore the
    distortion budget, and bound the leakage change by entropy continuity.
    """
    p_h = case.p_eh.sum(axis=0)
    i_he = float(_plogq(case.p_eh, case.p_e[:, None] * p_h[None, :]).sum())
    eta = case.n_b * step / 2.0
    d_max = float(case.cost.max())
    slack = D - case.d_min
    theta = 1.0 if slack <= 0 else min(1.0, eta * d_max / (2.0 * slack))
    if theta >= 1.0 or eta >= 0.5:
        return i_he
    return theta * i_he + _omega(eta, case.n_b) + _omega(eta, case.n_h * case.n_b)


def _leak_grad(case: CaseArrays, w: np.ndarray) -> np.ndarray:
    """Gradient of I(X_H; X^) in W; -inf where an empty cell would be filled."""
    p_h = case.p_eh.sum(axis=0)
    joint = case.p_eh.T @ w                                  # h, b
    r = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log2(joint / (p_h[:, None] * r[None, :]))    # -inf on empty cells
        # an unused output behaves like its limit: J(h,b)/r_b -> p(h|e)
        limit = np.log2(case.p_eh / (case.p_e[:, None] * p_h[None, :]))
    g = np.empty_like(w)
    for b in range(case.n_b):
        terms = limit if r[b] == 0 else np.broadcast_to(lr[:, b], case.p_eh.shape)
        with np.errstate(invalid="ignore"):
            g[:, b] = np.where(case.p_eh > 0, case.p_eh * terms, 0.0).sum(axis=1)
    return g


def a_posteriori_bound(case: CaseArrays, w: np.ndarray, D: float) -> float:
    """Frank-Wolfe duality gap at ``w`` over the distortion polytope (inf if undefined)."""
    g = _leak_grad(case, w)
    if not np.all(np.isfinite(g)):
        return float("inf")
    n_e, n_b = w.shape
    a_eq = np.kron(np.eye(n_e), np.ones(n_b))
    c = (case.p_e[:, None] * case.cost).ravel()
    res = linprog(g.ravel(), A_ub=c[None, :], b_ub=[D + TIE], A_eq=a_eq,
                  b_eq=np.ones(n_e), bounds=(0, None), method="highs")
    if res.status != 0:
        return float("inf")
    return max(float(g.ravel() @ w.ravel() - res.fun), 0.0)


class OracleCache:
    """Reuse grid tables across distortion levels."""

    def __init__(self):
        self._tables: dict[tuple, GridTable] = {}

    def table(self, src: SourceModel, e: EncodedSet, step: float) -> GridTable:
        key = (id(src), e.encoded, step)
        if key not in self._tables:
            self._tables[key] = GridTable(src.view(e), step)
        return self._tables[key]


def grid_oracle(src: SourceModel, e: EncodedSet, D: float, step: float) -> OracleResult:
    """Minimum leakage over grid channels with distortion <= D, and its rate."""
    return GridTable(src.view(e), step).solve(D)
