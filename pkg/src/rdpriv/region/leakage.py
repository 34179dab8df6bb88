"""Minimum leakage, lexicographic rate and membership in the achievable region."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..model import CaseArrays, EncodedSet, SourceModel
from ..probcore import Channel
from . import objectives as obj
from .frankwolfe import FWResult, fully_corrective_fw
from .params import InfeasibleError, SolverError, SolverParams

_FEAS = 1e-12


@dataclass(frozen=True)
class TradeoffPoint:
    rate: float
    distortion: float
    leakage: float

    def equivocation(self, h_hidden: float) -> float:
        return h_hidden - self.leakage


@dataclass
class LeakageResult:
    value: float
    channel: np.ndarray
    gap: float
    status: str
    starts: int = 1

    @property
    def witness(self) -> Channel:
        return Channel(self.channel)


@dataclass
class RateResult:
    rate: float
    channel: np.ndarray
    leakage: float
    status: str


@dataclass
class Membership:
    member: bool
    certified: bool
    witness: np.ndarray | None
    detail: dict = field(default_factory=dict)


def weighted_cost(case: CaseArrays) -> np.ndarray:
    return case.p_e[:, None] * case.cost


def pull_feasible(case: CaseArrays, w: np.ndarray, budget: float) -> np.ndarray:
    """Blend ``w`` toward the minimum-cost channel until distortion <= budget."""
    dw = obj.distortion(case, w)
    if dw <= budget + _FEAS:
        return w
    theta = max(budget - case.d_min, 0.0) / (dw - case.d_min)
    return theta * w + (1.0 - theta) * case.min_cost_channel


def _check_budget(case: CaseArrays, budget: float) -> None:
    if budget < case.d_min - _FEAS:
        raise InfeasibleError(
            f"distortion {budget:.6g} is below the achievable minimum {case.d_min:.6g}")


def feasible_starts(case: CaseArrays, budget: float, count: int, seed: int = 0,
                    warm: np.ndarray | None = None) -> list[np.ndarray]:
    """Deterministic start channels, all inside the distortion polytope."""
    rng = np.random.default_rng(seed)
    uniform = np.full(case.cost.shape, 1.0 / case.n_b)
    starts = [] if warm is None else [pull_feasible(case, np.asarray(warm, float), budget)]
    starts.append(pull_feasible(case, 0.5 * uniform + 0.5 * case.min_cost_channel, budget))
    while len(starts) < count:
        w = rng.dirichlet(np.ones(case.n_b), size=case.n_e)
        starts.append(pull_feasible(case, w, budget))
    return starts[:max(count, 1)]


def _solve(objective, case: CaseArrays, budget: float, start: np.ndarray,
           params: SolverParams) -> FWResult:
    return fully_corrective_fw(objective, weighted_cost(case), budget, start,
                               params.objective_tol, params.max_iters)


def min_leakage_case(case: CaseArrays, budget: float, params: SolverParams = SolverParams(),
                     warm: np.ndarray | None = None, seed: int = 0) -> LeakageResult:
    _check_budget(case, budget)
    # exact shortcuts: a constant reproduction, or a source with nothing to leak
    if budget >= case.d_zero_rate - _FEAS:
        return LeakageResult(0.0, case.zero_rate_channel.copy(), 0.0, "exact")
    if obj.leakage(case, case.min_cost_channel) <= 0.0:
        return LeakageResult(0.0, case.min_cost_channel.copy(), 0.0, "exact")

    objective = obj.Objective(case)
    best: FWResult | None = None
    used = 0
    for start in feasible_starts(case, budget, params.restarts, seed, warm):
        used += 1
        res = _solve(objective, case, budget, start, params)
        if best is None or res.value < best.value:
            best = res
        if res.converged:
            break
    assert best is not None
    if not best.converged:
        raise SolverError(f"leakage minimization at D={budget:.6g} did not converge",
                          gap=best.gap)
    return LeakageResult(best.value, best.channel, best.gap, best.status, used)


def min_leakage(src: SourceModel, e: EncodedSet, D: float,
                params: SolverParams = SolverParams(), warm=None) -> LeakageResult:
    """Smallest I(X_H; X^_R) over test channels with expected distortion <= D."""
    return min_leakage_case(src.view(e), D, params, warm)


def _slsqp_rate(case: CaseArrays, budget: float, cap: float, w0: np.ndarray,
                params: SolverParams) -> np.ndarray:
    shape = case.cost.shape
    c = weighted_cost(case).ravel()
    rows = np.kron(np.eye(shape[0]), np.ones(shape[1]))
    cons = [
        {"type": "eq", "fun": lambda x: x.reshape(shape).sum(axis=1) - 1.0,
         "jac": lambda x: rows},
        {"type": "ineq", "fun": lambda x: budget - c @ x, "jac": lambda x: -c},
        {"type": "ineq", "fun": lambda x: cap - obj.leakage(case, x.reshape(shape)),
         "jac": lambda x: -obj.leakage_grad(case, x.reshape(shape)).ravel()},
    ]
    res = minimize(lambda x: obj.rate(case, x.reshape(shape)), w0.ravel(),
                   jac=lambda x: np.clip(obj.rate_grad(case, x.reshape(shape)), -50, 50).ravel(),
                   method="SLSQP", bounds=[(0.0, 1.0)] * w0.size, constraints=cons,
                   options={"ftol": 1e-15, "maxiter": min(params.max_iters, 2000)})
    w = np.clip(res.x.reshape(shape), 0.0, None)
    return w / w.sum(axis=1, keepdims=True)


def _repair(case: CaseArrays, w: np.ndarray, anchor: np.ndarray, budget: float,
            cap: float) -> np.ndarray:
    """Smallest blend toward the feasible ``anchor`` that satisfies both constraints."""
    def ok(t):
        x = (1.0 - t) * w + t * anchor
        return obj.distortion(case, x) <= budget + _FEAS and obj.leakage(case, x) <= cap

    if ok(0.0):
        return w
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return (1.0 - hi) * w + hi * anchor


def min_rate_under_cap(case: CaseArrays, budget: float, cap: float, feasible: np.ndarray,
                       params: SolverParams = SolverParams(), rounds: int = 4) -> RateResult:
    """min I(X_E; X^) s.t. distortion <= budget and I(X_H; X^) <= cap.

    ``feasible`` must satisfy both constraints. Sequential quadratic
    programming from that point, restarted until the rate stops improving;
    each iterate is pulled back into the feasible set before it is accepted.
    """
    _check_budget(case, budget)
    anchor = np.asarray(feasible, dtype=float)
    if obj.leakage(case, anchor) > cap or obj.distortion(case, anchor) > budget + _FEAS:
        raise ValueError("starting channel violates the constraints")
    best, best_r = anchor, obj.rate(case, anchor)
    status = "max_rounds"
    for _ in range(rounds):
        w = _repair(case, _slsqp_rate(case, budget, cap, best, params), anchor, budget, cap)
        r = obj.rate(case, w)
        if r >= best_r - 1e-12:
            status = "ok"
            if r < best_r:
                best, best_r = w, r
            break
        best, best_r = w, r
    return RateResult(best_r, best, obj.leakage(case, best), status)


def rate_at_min_leakage(src: SourceModel, e: EncodedSet, D: float, lstar: LeakageResult,
                        params: SolverParams = SolverParams()) -> RateResult:
    """Smallest rate among channels within ``lex_slack`` of the minimum leakage."""
    case = src.view(e)
    return min_rate_under_cap(case, D, lstar.value + params.lex_slack, lstar.channel, params)


def membership_case(case: CaseArrays, point: TradeoffPoint, tol: float,
                    params: SolverParams = SolverParams(),
                    warm: np.ndarray | None = None) -> Membership:
    """Is ``point`` in the region (each coordinate relaxed by ``tol``)?

    Decided by minimizing the violation in two stages: leakage first, then
    rate under the leakage bound. A member comes back with its witness.
    """
    budget = point.distortion + tol
    if budget < case.d_min - _FEAS:
        return Membership(False, True, None, {"reason": "distortion below minimum"})
    cap = point.leakage + tol
    target = point.rate + tol
    if warm is not None:
        w = pull_feasible(case, np.asarray(warm, float), budget)
        if obj.leakage(case, w) <= cap and obj.rate(case, w) <= target:
            return Membership(True, True, w, {"stage": "warm"})
    lres = min_leakage_case(case, budget, params, warm)
    if lres.value > cap:
        certified = lres.value - max(lres.gap, 0.0) > cap
        return Membership(False, certified, None,
                          {"reason": "leakage", "min_leakage": lres.value, "gap": lres.gap})
    if obj.rate(case, lres.channel) <= target:
        return Membership(True, True, lres.channel, {"stage": "leakage"})
    rres = min_rate_under_cap(case, budget, cap, lres.channel, params)
    if rres.rate <= target:
        return Membership(True, True, rres.channel, {"stage": "rate"})
    return Membership(False, False, None, {"reason": "rate", "min_rate": rres.rate})


def membership(src: SourceModel, e: EncodedSet, point: TradeoffPoint, tol: float = 1e-6,
               params: SolverParams = SolverParams()) -> Membership:
    return membership_case(src.view(e), point, tol, params)
