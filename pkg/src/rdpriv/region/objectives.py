"""Rate, leakage and distortion of a test channel, with gradients (bits)."""

from __future__ import annotations

import numpy as np

from ..model import CaseArrays

LN2 = np.log(2.0)
TINY = 1e-300
# mutual information below this many bits is roundoff and reported as exactly 0
ZERO_FLOOR = 1e-14


def _snap(val) -> float:
    val = float(val)
    return 0.0 if val < ZERO_FLOOR else val


def _xlogy_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    pos = num > 0
    out[pos] = num[pos] * np.log(num[pos] / den[pos])
    return out


def distortion(case: CaseArrays, w: np.ndarray) -> float:
    return float(np.einsum("e,eb,eb->", case.p_e, w, case.cost))


def rate(case: CaseArrays, w: np.ndarray) -> float:
    """I(X_E; X^_R)."""
    joint = case.p_e[:, None] * w
    r = joint.sum(axis=0)
    return _snap(_xlogy_ratio(joint, case.p_e[:, None] * r[None, :]).sum() / LN2)


def leakage(case: CaseArrays, w: np.ndarray) -> float:
    """I(X_H; X^_R)."""
    joint = case.p_eh.T @ w
    p_h = case.p_eh.sum(axis=0)
    r = joint.sum(axis=0)
    return _snap(_xlogy_ratio(joint, p_h[:, None] * r[None, :]).sum() / LN2)


def rate_grad(case: CaseArrays, w: np.ndarray) -> np.ndarray:
    r = case.p_e @ w
    return case.p_e[:, None] * (np.log(np.maximum(w, TINY)) - np.log(np.maximum(r, TINY))) / LN2


def leakage_grad(case: CaseArrays, w: np.ndarray) -> np.ndarray:
    joint = case.p_eh.T @ w
    p_h = case.p_eh.sum(axis=0)
    r = joint.sum(axis=0)
    ratio = np.log(np.maximum(joint, TINY)) - np.log(np.maximum(p_h[:, None] * r[None, :], TINY))
    return (case.p_eh @ ratio) / LN2


class Objective:
    """``leakage + nu * rate`` restricted to a case; nu = 0 is pure leakage."""

    def __init__(self, case: CaseArrays, nu: float = 0.0, leak_weight: float = 1.0):
        self.case = case
        self.nu = float(nu)
        self.leak_weight = float(leak_weight)

    def value(self, w: np.ndarray) -> float:
        v = 0.0
        if self.leak_weight:
            v += self.leak_weight * leakage(self.case, w)
        if self.nu:
            v += self.nu * rate(self.case, w)
        return v

    def grad(self, w: np.ndarray) -> np.ndarray:
        g = np.zeros_like(w)
        if self.leak_weight:
            g += self.leak_weight * leakage_grad(self.case, w)
        if self.nu:
            g += self.nu * rate_grad(self.case, w)
        return g
