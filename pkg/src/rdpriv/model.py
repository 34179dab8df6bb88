"""Source model, encoded sets and single-channel evaluation of a trade-off point.

Product alphabets are flattened row-major over attributes in ascending index
order, so ``X_E`` for ``E = (0, 2)`` enumerates ``(x0, x2)`` with ``x2``
varying fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .probcore import (Channel, JointPmf, UsageError, ValidationError,
                       conditional_entropy, entropy_array, mutual_information)


@dataclass(frozen=True)
class AttributeSchema:
    sizes: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class PartitionSpec:
    revealed: tuple[int, ...]
    hidden: tuple[int, ...]


@dataclass(frozen=True)
class EncodedSet:
    encoded: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "encoded", tuple(sorted(set(int(a) for a in self.encoded))))


def _alphabet(sizes: Sequence[int], attrs: Sequence[int]) -> int:
    return int(np.prod([sizes[a] for a in attrs])) if attrs else 1


@dataclass(frozen=True, eq=False)
class SourceModel:
    schema: AttributeSchema
    partition: PartitionSpec
    joint: JointPmf
    recon_size: int
    distortion: np.ndarray

    @classmethod
    def build(cls, sizes: Sequence[int], revealed: Iterable[int], hidden: Iterable[int],
              joint, distortion=None, recon_size: int | None = None) -> "SourceModel":
        """Assemble a model; ``joint`` may be flat (row-major) or shaped.

        Without a distortion matrix the reproduction alphabet is ``X_R`` with
        Hamming distortion.
        """
        sizes = tuple(int(s) for s in sizes)
        revealed = tuple(sorted(int(a) for a in revealed))
        hidden = tuple(sorted(int(a) for a in hidden))
        arr = np.asarray(joint, dtype=float)
        if arr.ndim == 1:
            jp = JointPmf.from_flat(sizes, arr)
        else:
            jp = JointPmf(arr)
        n_r = _alphabet(sizes, revealed)
        if distortion is None:
            m = n_r if recon_size is None else int(recon_size)
            dist = (np.arange(n_r)[:, None] != np.arange(m)[None, :]).astype(float)
        else:
            dist = np.array(distortion, dtype=float)
            if dist.ndim != 2:
                raise ValidationError("distortion must be a matrix")
            m = dist.shape[1] if recon_size is None else int(recon_size)
        dist.setflags(write=False)
        return cls(AttributeSchema(sizes), PartitionSpec(revealed, hidden), jp, m, dist)

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.schema.sizes

    @property
    def revealed(self) -> tuple[int, ...]:
        return self.partition.revealed

    @property
    def hidden(self) -> tuple[int, ...]:
        return self.partition.hidden

    @property
    def all_attrs(self) -> tuple[int, ...]:
        return tuple(range(self.schema.k))

    @property
    def d_max(self) -> float:
        return float(self.distortion.max())

    def alphabet(self, attrs: Sequence[int]) -> int:
        return _alphabet(self.sizes, attrs)

    def project_index(self, attrs: Sequence[int]) -> np.ndarray:
        """Flat ``X_attrs`` index of every flat ``X_K`` cell."""
        grids = np.indices(self.sizes).reshape(self.schema.k, -1)
        idx = np.zeros(grids.shape[1], dtype=np.int64)
        for a in attrs:
            idx = idx * self.sizes[a] + grids[a]
        return idx

    @cached_property
    def h_hidden(self) -> float:
        return entropy_array(np.bincount(self.project_index(self.hidden),
                                         weights=self.joint.flat,
                                         minlength=self.alphabet(self.hidden)))

    def view(self, e: EncodedSet | Iterable[int]) -> "CaseArrays":
        e = e if isinstance(e, EncodedSet) else EncodedSet(tuple(e))
        problems = validate(self, e)
        if problems:
            raise ValidationError("; ".join(problems))
        return CaseArrays.from_source(self, e)


@dataclass(frozen=True, eq=False)
class CaseArrays:
    """Dense arrays for one (source, encoded set) pair.

    ``p_eh[e, h]`` is the joint of ``(X_E, X_H)``; ``cost[e, b]`` is the
    distortion of reproducing ``b`` when the revealed part of ``e`` is read.
    """

    source: SourceModel
    encoded: EncodedSet
    p_e: np.ndarray
    p_eh: np.ndarray
    r_of_e: np.ndarray
    cost: np.ndarray
    h_hidden: float

    @classmethod
    def from_source(cls, src: SourceModel, e: EncodedSet) -> "CaseArrays":
        flat = src.joint.flat
        n_e, n_h = src.alphabet(e.encoded), src.alphabet(src.hidden)
        ei = src.project_index(e.encoded)
        hi = src.project_index(src.hidden)
        p_eh = np.bincount(ei * n_h + hi, weights=flat, minlength=n_e * n_h).reshape(n_e, n_h)
        r_of_e = _subindex(src, e.encoded, src.revealed)
        cost = src.distortion[r_of_e]
        for a in (p_eh, r_of_e, cost):
            a.setflags(write=False)
        return cls(src, e, p_eh.sum(axis=1), p_eh, r_of_e, cost, src.h_hidden)

    @property
    def n_e(self) -> int:
        return self.p_eh.shape[0]

    @property
    def n_h(self) -> int:
        return self.p_eh.shape[1]

    @property
    def n_b(self) -> int:
        return self.cost.shape[1]

    @cached_property
    def d_min(self) -> float:
        """Smallest achievable expected distortion."""
        return float(self.p_e @ self.cost.min(axis=1))

    @cached_property
    def d_zero_rate(self) -> float:
        """Smallest distortion of a constant reproduction."""
        return float((self.p_e @ self.cost).min())

    @cached_property
    def min_cost_channel(self) -> np.ndarray:
        w = np.zeros(self.cost.shape)
        w[np.arange(self.n_e), self.cost.argmin(axis=1)] = 1.0
        return w

    @cached_property
    def zero_rate_channel(self) -> np.ndarray:
        w = np.zeros(self.cost.shape)
        w[:, int((self.p_e @ self.cost).argmin())] = 1.0
        return w


def _subindex(src: SourceModel, big: Sequence[int], small: Sequence[int]) -> np.ndarray:
    """``X_small`` index of every ``X_big`` symbol, for ``small ⊆ big``."""
    sizes = [src.sizes[a] for a in big]
    digits = np.indices(sizes).reshape(len(sizes), -1)
    idx = np.zeros(digits.shape[1], dtype=np.int64)
    for a in small:
        idx = idx * src.sizes[a] + digits[list(big).index(a)]
    return idx


@dataclass(frozen=True)
class PointEval:
    rate: float
    distortion: float
    equivocation: float
    leakage: float


def validate(src: SourceModel, e: EncodedSet | None = None) -> list[str]:
    """Return every invariant violation found; empty means well-formed."""
    out: list[str] = []
    sizes = src.sizes
    if len(sizes) < 2:
        out.append("schema: need at least 2 attributes")
    if any(s < 2 for s in sizes):
        out.append("schema: every attribute alphabet needs size >= 2")
    k = set(range(len(sizes)))
    r, h = set(src.revealed), set(src.hidden)
    if r & h:
        out.append(f"partition: revealed and hidden overlap on {sorted(r & h)}")
    if (r | h) != k:
        out.append(f"partition: revealed ∪ hidden must equal {sorted(k)}")
    if not r or not h:
        out.append("partition: revealed and hidden must both be nonempty")
    if src.joint.shape != tuple(sizes):
        out.append(f"joint: shape {src.joint.shape} does not match sizes {tuple(sizes)}")
    d = src.distortion
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        out.append("distortion: entries must be finite and nonnegative")
    if (r | h) <= k and d.shape[0] != src.alphabet(sorted(r & k)):
        out.append(f"distortion: {d.shape[0]} rows but |X_R| = {src.alphabet(sorted(r & k))}")
    if d.shape[1] != src.recon_size or src.recon_size < 1:
        out.append(f"distortion: {d.shape[1]} columns but recon_size = {src.recon_size}")
    if e is not None:
        es = set(e.encoded)
        if not r <= es:
            out.append(f"encoded set {sorted(es)} must contain revealed {sorted(r)}")
        if not es <= k:
            out.append(f"encoded set {sorted(es)} must lie within {sorted(k)}")
    return out


def _check_channel(case: CaseArrays, w: Channel) -> None:
    if w.rows != case.n_e or w.cols != case.n_b:
        raise UsageError(
            f"channel is {w.rows}x{w.cols}, expected {case.n_e}x{case.n_b} (|X_E| x |X^_R|)")


def induced_joint(src: SourceModel, e: EncodedSet, w: Channel) -> JointPmf:
    """p(x_K) W(x^ | x_E) over axes ``(*K, X^_R)``."""
    case = src.view(e)
    _check_channel(case, w)
    ei = src.project_index(case.encoded.encoded)
    probs = src.joint.flat[:, None] * w.probs[ei]
    return JointPmf(probs.reshape(src.sizes + (case.n_b,)))


def eval_point(src: SourceModel, e: EncodedSet, w: Channel) -> PointEval:
    """Rate, distortion, equivocation and leakage achieved by one test channel."""
    joint = induced_joint(src, e, w)
    k = src.schema.k
    out_axis = (k,)
    rate = mutual_information(joint, e.encoded, out_axis)
    equiv = conditional_entropy(joint, src.hidden, out_axis)
    # distortion from the (X_R, X^_R) marginal
    drop = tuple(a for a in range(k) if a not in src.revealed)
    p_rb = joint.probs.sum(axis=drop).reshape(-1, src.recon_size)
    dist = float((p_rb * src.distortion).sum())
    return PointEval(rate, dist, equiv, max(src.h_hidden - equiv, 0.0))


def lift_channel(w: Channel, src: SourceModel, e: EncodedSet) -> Channel:
    """Extend a channel on ``X_R`` to ``X_E`` by ignoring the hidden part."""
    case = src.view(e)
    if w.rows != src.alphabet(src.revealed):
        raise UsageError(f"channel has {w.rows} rows, |X_R| = {src.alphabet(src.revealed)}")
    return Channel(w.probs[case.r_of_e])


def lift_between(w: np.ndarray, src: SourceModel, e_small: EncodedSet,
                 e_big: EncodedSet) -> np.ndarray:
    """Lift a channel on ``X_{e_small}`` to ``X_{e_big}`` for ``e_small ⊆ e_big``."""
    if not set(e_small.encoded) <= set(e_big.encoded):
        raise UsageError("lift requires e_small ⊆ e_big")
    return np.asarray(w)[_subindex(src, e_big.encoded, e_small.encoded)]
