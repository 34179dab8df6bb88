"""Reference computations that share no code with the package.

Information quantities are summed cell by cell in plain Python (or in
``decimal`` at 50 digits); optimization references use cvxpy.
"""

from __future__ import annotations

import itertools
import math
from decimal import Decimal, getcontext

import numpy as np

getcontext().prec = 50
LN2 = Decimal(2).ln()


def entropy_decimal(p) -> float:
    total = Decimal(0)
    for x in p:
        x = Decimal(str(x))
        if x > 0:
            total -= x * x.ln() / LN2
    return float(total)


def _h(d: dict) -> float:
    return -sum(v * math.log2(v) for v in d.values() if v > 0)


def _marg(cells: dict, pick) -> dict:
    out: dict = {}
    for key, v in cells.items():
        k = pick(key)
        out[k] = out.get(k, 0.0) + v
    return out


def brute_point(sizes, revealed, hidden, encoded, joint_flat, w, dist):
    """(rate, distortion, equivocation, leakage) by looping over every (x_K, x^) cell."""
    cells = {}
    xs = list(itertools.product(*[range(s) for s in sizes]))
    for i, x in enumerate(xs):
        xe = 0
        for a in encoded:
            xe = xe * sizes[a] + x[a]
        for b in range(w.shape[1]):
            cells[(x, b)] = cells.get((x, b), 0.0) + joint_flat[i] * w[xe, b]

    def idx(x, attrs):
        v = 0
        for a in attrs:
            v = v * sizes[a] + x[a]
        return v

    pe_b = _marg(cells, lambda k: (idx(k[0], encoded), k[1]))
    ph_b = _marg(cells, lambda k: (idx(k[0], hidden), k[1]))
    pe = _marg(cells, lambda k: idx(k[0], encoded))
    ph = _marg(cells, lambda k: idx(k[0], hidden))
    pb = _marg(cells, lambda k: k[1])
    rate = _h(pe) + _h(pb) - _h(pe_b)
    equiv = _h(ph_b) - _h(pb)
    leak = _h(ph) - equiv
    d = sum(v * dist[idx(k[0], revealed), k[1]] for k, v in cells.items())
    return rate, d, equiv, leak


def case_arrays(sizes, hidden, encoded, joint_flat):
    """p(x_E, x_H) from scratch."""
    n_e = int(np.prod([sizes[a] for a in encoded]))
    n_h = int(np.prod([sizes[a] for a in hidden]))
    p = np.zeros((n_e, n_h))
    for i, x in enumerate(itertools.product(*[range(s) for s in sizes])):
        e = h = 0
        for a in encoded:
            e = e * sizes[a] + x[a]
        for a in hidden:
            h = h * sizes[a] + x[a]
        p[e, h] += joint_flat[i]
    return p


def cvx_min_leakage(p_eh, cost, D):
    """min I(X_H; X^) s.t. E d <= D, in bits, by a conic solver."""
    import cvxpy as cp

    n_e, n_b = cost.shape
    p_e, p_h = p_eh.sum(axis=1), p_eh.sum(axis=0)
    W = cp.Variable((n_e, n_b), nonneg=True)
    J = p_eh.T @ W
    r = p_e @ W
    leak = cp.sum(cp.rel_entr(J, cp.reshape(p_h, (p_h.size, 1), order="C") @ cp.reshape(r, (1, n_b), order="C")))
    cons = [cp.sum(W, axis=1) == 1, cp.sum(cp.multiply(p_e[:, None] * cost, W)) <= D]
    prob = cp.Problem(cp.Minimize(leak), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value / math.log(2), np.clip(W.value, 0, None)


def cvx_min_rate(p_eh, cost, D, cap):
    """min I(X_E; X^) s.t. E d <= D and I(X_H; X^) <= cap (bits)."""
    import cvxpy as cp

    n_e, n_b = cost.shape
    p_e, p_h = p_eh.sum(axis=1), p_eh.sum(axis=0)
    W = cp.Variable((n_e, n_b), nonneg=True)
    r = p_e @ W
    rate = cp.sum(cp.rel_entr(cp.multiply(p_e[:, None], W),
                              cp.reshape(p_e, (n_e, 1), order="C") @ cp.reshape(r, (1, n_b), order="C")))
    J = p_eh.T @ W
    leak = cp.sum(cp.rel_entr(J, cp.reshape(p_h, (p_h.size, 1), order="C") @ cp.reshape(r, (1, n_b), order="C")))
    cons = [cp.sum(W, axis=1) == 1, cp.sum(cp.multiply(p_e[:, None] * cost, W)) <= D,
            leak <= cap * math.log(2)]
    prob = cp.Problem(cp.Minimize(rate), cons)
    prob.solve(solver=cp.CLARABEL)
    w = np.clip(W.value, 0, None)
    return w / w.sum(axis=1, keepdims=True)


def mi_bits(p_x, w):
    """I(X; Y) for input p_x through channel w, cell by cell."""
    q = p_x @ w
    total = 0.0
    for x in range(w.shape[0]):
        for y in range(w.shape[1]):
            v = p_x[x] * w[x, y]
            if v > 0:
                total += v * math.log2(w[x, y] / q[y])
    return max(total, 0.0)


def leak_bits(p_eh, w):
    p_h = p_eh.sum(axis=0)
    joint = p_eh.T @ w
    r = joint.sum(axis=0)
    total = 0.0
    for h in range(joint.shape[0]):
        for b in range(joint.shape[1]):
            if joint[h, b] > 0:
                total += joint[h, b] * math.log2(joint[h, b] / (p_h[h] * r[b]))
    return max(total, 0.0)


def blend_to_feasible(p_eh, cost, w, anchor, D, cap):
    """Smallest blend of ``w`` toward ``anchor`` meeting distortion and leakage limits."""
    p_e = p_eh.sum(axis=1)

    def ok(t):
        x = (1 - t) * w + t * anchor
        return (p_e @ (x * cost).sum(axis=1) <= D + 1e-12) and leak_bits(p_eh, x) <= cap

    if ok(0.0):
        return w
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return (1 - hi) * w + hi * anchor


def binary_rd(d: float) -> float:
    """1 - h(d) for a uniform bit under Hamming distortion, d <= 1/2."""
    if d <= 0:
        return 1.0
    if d >= 0.5:
        return 0.0
    return 1.0 + d * math.log2(d) + (1 - d) * math.log2(1 - d)
