"""Structural checks: inclusion between encoded sets and convexity of the region."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import EncodedSet, SourceModel, lift_between
from . import objectives as obj
from .leakage import TradeoffPoint, membership_case, min_leakage_case
from .params import SolverParams


@dataclass
class InclusionReport:
    d_grid: list[float]
    small: list[float]
    big: list[float]
    violations: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def inclusion_check(src: SourceModel, e1: EncodedSet, e2: EncodedSet, d_grid,
                    params: SolverParams = SolverParams(), tol: float = 1e-6) -> InclusionReport:
    """min leakage with the larger encoded set never exceeds the smaller one's."""
    if not set(e1.encoded) <= set(e2.encoded):
        raise ValueError("inclusion check needs e1 ⊆ e2")
    c1, c2 = src.view(e1), src.view(e2)
    rep = InclusionReport([], [], [])
    for d in d_grid:
        d = float(d)
        if d < c1.d_min - 1e-12:
            continue
        l1 = min_leakage_case(c1, d, params)
        l2 = min_leakage_case(c2, d, params, warm=lift_between(l1.channel, src, e1, e2))
        rep.d_grid.append(d)
        rep.small.append(l1.value)
        rep.big.append(l2.value)
        if l2.value > l1.value + tol:
            rep.violations.append((d, l1.value, l2.value))
    return rep


@dataclass(frozen=True)
class MixtureWitness:
    lam: float
    channel: np.ndarray


@dataclass
class MixtureTrial:
    lam: float
    p1: TradeoffPoint
    p2: TradeoffPoint
    mixture: TradeoffPoint
    solver_member: bool
    witness: MixtureWitness | None


@dataclass
class ConvexityReport:
    trials: list[MixtureTrial]

    @property
    def failures(self) -> list[MixtureTrial]:
        return [t for t in self.trials if t.witness is None]

    @property
    def ok(self) -> bool:
        return not self.failures


def point_of(case, w: np.ndarray) -> TradeoffPoint:
    return TradeoffPoint(obj.rate(case, w), obj.distortion(case, w), obj.leakage(case, w))


def dominates(case, w: np.ndarray, target: TradeoffPoint, tol: float) -> bool:
    p = point_of(case, w)
    return (p.rate <= target.rate + tol and p.distortion <= target.distortion + tol
            and p.leakage <= target.leakage + tol)


def convexity_certificate(src: SourceModel, e: EncodedSet, trials: int,
                          params: SolverParams = SolverParams(), seed: int = 0,
                          tol: float = 1e-6) -> ConvexityReport:
    """Mix random achievable points and confirm each mixture is a member.

    The solver decides membership on its own; when it cannot, the mixed
    channel ``lam*W1 + (1-lam)*W2`` is tried as a witness, which is valid
    because rate and leakage are convex in the channel.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    case = src.view(e)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        w1 = rng.dirichlet(np.ones(case.n_b), size=case.n_e)
        w2 = rng.dirichlet(np.ones(case.n_b), size=case.n_e)
        lam = float(rng.uniform(0.0, 1.0))
        p1, p2 = point_of(case, w1), point_of(case, w2)
        mix = TradeoffPoint(lam * p1.rate + (1 - lam) * p2.rate,
                            lam * p1.distortion + (1 - lam) * p2.distortion,
                            lam * p1.leakage + (1 - lam) * p2.leakage)
        res = membership_case(case, mix, tol, params)
        witness = None
        if res.member and dominates(case, res.witness, mix, tol):
            witness = MixtureWitness(lam, res.witness)
        else:
            wm = lam * w1 + (1 - lam) * w2
            if dominates(case, wm, mix, tol):
                witness = MixtureWitness(lam, wm)
        out.append(MixtureTrial(lam, p1, p2, mix, res.member, witness))
    return ConvexityReport(out)
