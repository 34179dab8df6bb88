"""Rate-distortion curve by Blahut-Arimoto alternating minimization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..model import CaseArrays, EncodedSet, SourceModel
from . import objectives as obj
from .params import SolverError, SolverParams

_TIE = 1e-12


@dataclass(frozen=True)
class BAResult:
    slope: float
    channel: np.ndarray
    distortion: float
    rate: float
    gap: float
    iterations: int


def _ba_gap(p: np.ndarray, kernel: np.ndarray, q: np.ndarray) -> tuple[float, np.ndarray]:
    """Upper minus lower bound on the Lagrangian optimum at ``q`` (nats), and ``c``."""
    z = np.maximum(kernel @ q, obj.TINY)
    c = (p / z) @ kernel
    logc = np.log(np.maximum(c, obj.TINY))
    return float(logc.max() - q @ logc), c


def _polish(p: np.ndarray, kernel: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Minimize the convex dual -sum_e p_e log (K q)_e over the simplex directly.

    Near the slope where the curve leaves zero rate the alternating updates
    converge sublinearly; a quasi-Newton step finishes the job.
    """
    def fun(x):
        return -float(p @ np.log(np.maximum(kernel @ x, obj.TINY)))

    def jac(x):
        return -((p / np.maximum(kernel @ x, obj.TINY)) @ kernel)

    res = minimize(fun, q, jac=jac, method="SLSQP", bounds=[(0.0, 1.0)] * q.size,
                   constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                 "jac": lambda x: np.ones_like(x)}],
                   options={"ftol": 1e-16, "maxiter": 500})
    x = np.clip(res.x, 0.0, None)
    return x / x.sum()


def _ba(case: CaseArrays, kernel: np.ndarray, q0: np.ndarray, tol: float,
        max_iters: int, slope: float) -> BAResult:
    """Iterate ``W ∝ q * kernel``, ``q = p_e W`` until the Blahut bound gap < tol."""
    p = case.p_e
    q = q0.copy()
    gap = np.inf
    it = 0
    polish_at = min(2000, max_iters // 2)
    for it in range(1, max_iters + 1):
        gap, c = _ba_gap(p, kernel, q)
        if gap < tol:
            break
        if it == polish_at:
            cand = _polish(p, kernel, q)
            cand_gap, _ = _ba_gap(p, kernel, cand)
            if cand_gap < gap:
                q, gap = cand, cand_gap
                if gap < tol:
                    break
                continue
        q = q * c
        q /= q.sum()
    w = q[None, :] * kernel
    w /= w.sum(axis=1, keepdims=True)
    return BAResult(slope, w, obj.distortion(case, w), obj.rate(case, w), gap, it)


def ba_at_slope(case: CaseArrays, slope: float, q0: np.ndarray | None = None,
                params: SolverParams = SolverParams()) -> BAResult:
    """Minimize I(X_E; X^) + slope * E[d] (slope in nats per distortion unit)."""
    shifted = case.cost - case.cost.min(axis=1, keepdims=True)
    kernel = np.exp(-slope * shifted)
    # a constant reproduction is optimal iff its fixed-point test passes; BA only
    # approaches it sublinearly, so settle that case directly
    star = int((case.p_e @ case.cost).argmin())
    if np.all((case.p_e / kernel[:, star]) @ kernel <= 1.0 + 1e-15):
        w = case.zero_rate_channel.copy()
        return BAResult(slope, w, obj.distortion(case, w), 0.0, 0.0, 0)
    q0 = np.full(case.n_b, 1.0 / case.n_b) if q0 is None else q0
    return _ba(case, kernel, q0, params.objective_tol, params.max_iters, slope)


def ba_min_distortion(case: CaseArrays, params: SolverParams = SolverParams()) -> BAResult:
    """Rate at ``d_min``: channels restricted to per-row minimum-cost symbols."""
    mask = (case.cost <= case.cost.min(axis=1, keepdims=True) + _TIE).astype(float)
    q0 = np.full(case.n_b, 1.0 / case.n_b)
    return _ba(case, mask, q0, params.objective_tol, params.max_iters, np.inf)


def lower_convex_hull(d: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((r, d))
    hull: list[tuple[float, float]] = []
    for x, y in zip(d[order], r[order]):
        if hull and abs(hull[-1][0] - x) <= 1e-15:
            continue  # same D, larger R
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append((float(x), float(y)))
    hx, hy = zip(*hull)
    return np.array(hx), np.array(hy)


@dataclass
class RDSweep:
    d: np.ndarray
    r: np.ndarray
    hull_d: np.ndarray
    hull_r: np.ndarray
    max_gap: float
    hull_channels: tuple[np.ndarray, ...] = ()

    def witness(self, d: float) -> np.ndarray | None:
        """A channel achieving the hull value at ``d``: mix of the two bracketing hull channels."""
        if not self.hull_channels or d < self.hull_d[0] - 1e-12:
            return None
        if d >= self.hull_d[-1]:
            return self.hull_channels[-1]
        i = int(np.searchsorted(self.hull_d, d, side="right"))
        if i == 0:
            return self.hull_channels[0]
        d0, d1 = self.hull_d[i - 1], self.hull_d[i]
        t = (d - d0) / (d1 - d0)
        return (1 - t) * self.hull_channels[i - 1] + t * self.hull_channels[i]

    def __call__(self, d_query) -> np.ndarray:
        d_query = np.asarray(d_query, dtype=float)
        vals = np.interp(d_query, self.hull_d, self.hull_r)
        vals = np.where(d_query >= self.hull_d[-1], 0.0, vals)
        return np.where(d_query < self.hull_d[0] - 1e-12, np.nan, vals)


def _floor(q: np.ndarray, eps: float = 1e-3) -> np.ndarray:
    # warm starts near a simplex vertex escape very slowly close to the critical slope
    q = np.maximum(q, eps)
    return q / q.sum()


def rd_sweep(case: CaseArrays, targets=(), params: SolverParams = SolverParams(),
             n_slopes: int = 96) -> RDSweep:
    """Slope sweep plus bisection on the slope toward every target distortion."""
    spread = case.cost.max(axis=1) - case.cost.min(axis=1)
    gaps = np.abs(case.cost - case.cost.min(axis=1, keepdims=True))
    pos = gaps[gaps > _TIE]
    if pos.size == 0:  # distortion cannot be reduced below d_zero_rate
        return RDSweep(np.array([case.d_min]), np.array([0.0]),
                       np.array([case.d_min]), np.array([0.0]), 0.0,
                       (case.zero_rate_channel.copy(),))
    s_hi = 40.0 / pos.min()
    s_lo = 1e-3 / max(spread.max(), _TIE)
    slopes = np.geomspace(s_lo, s_hi, n_slopes)

    results: list[BAResult] = []
    q = None
    for s in slopes:
        res = ba_at_slope(case, s, q, params)
        q = res.channel.T @ case.p_e
        q = _floor(q)
        results.append(res)

    for t in np.asarray(targets, dtype=float):
        if not case.d_min < t < case.d_zero_rate:
            continue
        above = [r for r in results if r.distortion > t]
        below = [r for r in results if r.distortion <= t]
        if not above or not below:
            continue
        lo = max(above, key=lambda r: r.slope)   # smaller slope, D > t
        hi = min(below, key=lambda r: r.slope)   # larger slope, D <= t
        a, b = lo.slope, hi.slope
        qa = hi.channel.T @ case.p_e
        for _ in range(60):
            if b / a - 1 < 1e-13:
                break
            mid = np.sqrt(a * b)
            res = ba_at_slope(case, mid, _floor(qa), params)
            results.append(res)
            if abs(res.distortion - t) < 1e-13:
                break
            if res.distortion > t:
                a = mid
            else:
                b = mid
                qa = res.channel.T @ case.p_e

    end = ba_min_distortion(case, params)
    everything = results + [end]
    chans = [x.channel for x in everything] + [case.zero_rate_channel]
    gaps = np.array([x.gap for x in everything] + [0.0])
    d = np.array([x.distortion for x in everything] + [case.d_zero_rate])
    r = np.array([x.rate for x in everything] + [0.0])
    hd, hr = lower_convex_hull(d, r)
    # keep the nonincreasing part only; beyond its minimum R stays 0
    stop = int(np.argmin(hr)) + 1
    on_hull = [int(np.flatnonzero((d == x) & (r == y))[0]) for x, y in zip(hd[:stop], hr[:stop])]
    hull_ch = tuple(chans[i] for i in on_hull)
    # unconverged samples are still achievable points; only hull vertices must be tight
    max_gap = float(gaps[on_hull].max())
    if max_gap > params.curve_tol:
        raise SolverError(f"Blahut-Arimoto did not converge within {params.max_iters} "
                          f"iterations", gap=max_gap)
    return RDSweep(d, r, hd[:stop], hr[:stop], max_gap, hull_ch)


def rd_curve(src: SourceModel, e: EncodedSet, d_grid,
             params: SolverParams = SolverParams()) -> list[tuple[float, float]]:
    """R(D) on ``d_grid``; NaN marks distortions below the achievable minimum."""
    case = src.view(e)
    d_grid = np.asarray(d_grid, dtype=float)
    sweep = rd_sweep(case, d_grid, params)
    return [(float(d), float(v)) for d, v in zip(d_grid, sweep(d_grid))]
