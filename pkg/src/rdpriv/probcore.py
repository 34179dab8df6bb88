"""Finite-alphabet distributions and information measures (all in bits)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PMF_TOL = 1e-9


class ValidationError(ValueError):
    """A probability object violates its invariants."""


class BudgetError(ValueError):
    """A computation would exceed its enumeration budget and was refused."""

    def __init__(self, message: str, needed: float, budget: float):
        super().__init__(message)
        self.needed = needed
        self.budget = budget


class UsageError(ValueError):
    """An operation was called with incompatible arguments."""


def _check_probs(probs: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(probs)):
        raise ValidationError(f"{what}: non-finite entry")
    if np.any(probs < 0):
        raise ValidationError(f"{what}: negative entry {probs.min():.3g}")
    total = probs.sum()
    if abs(total - 1.0) > PMF_TOL:
        raise ValidationError(f"{what}: sums to {total:.12g}, not 1")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Pmf:
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs).ravel()
        _check_probs(probs, "pmf")
        object.__setattr__(self, "probs", probs)

    @property
    def size(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class JointPmf:
    """Joint distribution over several finite axes, stored as an ndarray."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim == 0:
            raise ValidationError("joint pmf needs at least one axis")
        _check_probs(probs, "joint pmf")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_flat(cls, shape: Sequence[int], flat: Sequence[float]) -> "JointPmf":
        flat = np.asarray(flat, dtype=float)
        if flat.size != int(np.prod(shape)):
            raise ValidationError(
                f"flat length {flat.size} does not match shape {tuple(shape)}")
        return cls(flat.reshape(tuple(shape)))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    @property
    def flat(self) -> np.ndarray:
        return self.probs.ravel()


@dataclass(frozen=True)
class Channel:
    """Row-stochastic matrix W[x, y] = W(y | x)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 2:
            raise ValidationError("channel must be a matrix")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("channel has a negative or non-finite entry")
        err = np.abs(probs.sum(axis=1) - 1.0).max()
        if err > PMF_TOL:
            raise ValidationError(f"channel row sum off by {err:.3g}")
        object.__setattr__(self, "probs", probs)

    @property
    def rows(self) -> int:
        return self.probs.shape[0]

    @property
    def cols(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def identity(cls, m: int) -> "Channel":
        return cls(np.eye(m))

    @classmethod
    def constant(cls, rows: int, out: Sequence[float]) -> "Channel":
        return cls(np.tile(np.asarray(out, dtype=float), (rows, 1)))


def _as_array(p) -> np.ndarray:
    if isinstance(p, (Pmf, JointPmf, Channel)):
        return p.probs
    return np.asarray(p, dtype=float)


def entropy_array(p: np.ndarray) -> float:
    """Entropy in bits of an already-validated array; 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def entropy(p) -> float:
    """Shannon entropy in bits."""
    if not isinstance(p, (Pmf, JointPmf)):
        p = Pmf(p)
    return max(entropy_array(p.probs), 0.0)


def _axes(axes: Iterable[int], ndim: int) -> tuple[int, ...]:
    axes = tuple(sorted(set(int(a) for a in axes)))
    for a in axes:
        if not 0 <= a < ndim:
            raise UsageError(f"axis {a} outside 0..{ndim - 1}")
    return axes


def _disjoint(a: tuple[int, ...], b: tuple[int, ...]) -> None:
    if set(a) & set(b):
        raise UsageError(f"axis sets {a} and {b} overlap")


def marginalize(j: JointPmf, keep_axes: Iterable[int]) -> JointPmf:
    keep = _axes(keep_axes, j.ndim)
    if not keep:
        raise UsageError("keep_axes must be nonempty")
    drop = tuple(a for a in range(j.ndim) if a not in keep)
    return JointPmf(j.probs.sum(axis=drop) if drop else j.probs)


def _marginal_entropy(j: JointPmf, axes: tuple[int, ...]) -> float:
    if not axes:
        return 0.0
    drop = tuple(a for a in range(j.ndim) if a not in axes)
    return entropy_array(j.probs.sum(axis=drop) if drop else j.probs)


def conditional_entropy(j: JointPmf, target_axes, given_axes=()) -> float:
    """H(target | given) = H(target, given) - H(given)."""
    t = _axes(target_axes, j.ndim)
    g = _axes(given_axes, j.ndim)
    _disjoint(t, g)
    h = _marginal_entropy(j, tuple(sorted(t + g))) - _marginal_entropy(j, g)
    return max(h, 0.0)


def mutual_information(j: JointPmf, axes_a, axes_b) -> float:
    a = _axes(axes_a, j.ndim)
    b = _axes(axes_b, j.ndim)
    _disjoint(a, b)
    mi = (_marginal_entropy(j, a) + _marginal_entropy(j, b)
          - _marginal_entropy(j, tuple(sorted(a + b))))
    if mi < -1e-12:
        raise ArithmeticError(f"mutual information {mi:.3g} < 0")
    return max(mi, 0.0)


def variational_distance(p, q) -> float:
    """Sum of absolute differences, in [0, 2]."""
    p, q = _as_array(p).ravel(), _as_array(q).ravel()
    if p.shape != q.shape:
        raise UsageError(f"alphabet sizes differ: {p.size} vs {q.size}")
    return float(np.abs(p - q).sum())


def compose(inp, w: Channel) -> JointPmf:
    """Joint over (input, output) with entry p(x) W(y|x)."""
    p = inp if isinstance(inp, Pmf) else Pmf(inp)
    if p.size != w.rows:
        raise UsageError(f"input size {p.size} != channel rows {w.rows}")
    return JointPmf(p.probs[:, None] * w.probs)


def entropy_continuity_bound(dv: float, alphabet: int) -> float:
    """Upper bound on |H(P) - H(Q)| for variational distance dv < 1/2."""
    if dv <= 0:
        return 0.0
    return float(-dv * np.log2(dv / alphabet))
