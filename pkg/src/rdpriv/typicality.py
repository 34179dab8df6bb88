"""Types, strongly typical sets and exhaustive checks of the typicality lemmas.

Everything here is exact enumeration at small blocklength. Sequences are
integer arrays; batches of sequences are 2-D arrays with one row per
sequence, enumerated in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, exp, log2, sqrt
from typing import Sequence

import numpy as np

from .probcore import BudgetError as _BudgetError
from .probcore import Channel, Pmf, UsageError, entropy_array, entropy_continuity_bound

ENUM_BUDGET = 10**8
# slack granted to the conclusion of an implication (never to its premise),
# so that float rounding in P or delta cannot manufacture a counterexample
CONCLUSION_TOL = 1e-9


class BudgetError(_BudgetError):
    def __init__(self, needed: float, budget: int = ENUM_BUDGET):
        super().__init__(f"enumeration needs {needed:.3g} cells, budget is {budget:.3g}",
                         needed, budget)


@dataclass(frozen=True)
class SequenceU:
    symbols: tuple[int, ...]
    alphabet: int

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        if any(s < 0 or s >= self.alphabet for s in syms):
            raise UsageError(f"symbol outside alphabet of size {self.alphabet}")
        object.__setattr__(self, "symbols", syms)

    @property
    def n(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class TypeStats:
    counts: tuple[int, ...]
    n: int

    @property
    def pmf(self) -> Pmf:
        return Pmf(np.array(self.counts, dtype=float) / self.n)


@dataclass(frozen=True)
class CondTypeStats:
    joint: np.ndarray          # N(a, b)

    @property
    def row_counts(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def defined(self) -> np.ndarray:
        return self.row_counts > 0

    @property
    def conditional(self) -> np.ndarray:
        """V(b|a); rows with N(a) = 0 are NaN."""
        rows = self.row_counts[:, None].astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(rows > 0, self.joint / rows, np.nan)


def delta_schedule(n: int, c: float) -> float:
    """(c / sqrt(n)) * log2(n)."""
    if n < 2:
        raise UsageError("delta schedule needs n >= 2")
    if c <= 0:
        raise UsageError("schedule constant must be positive")
    return c / sqrt(n) * log2(n)


@dataclass(frozen=True)
class TypicalityParams:
    """Typicality constants for a source with the given alphabet sizes."""

    delta: float
    tau: float
    c: float
    size_e: int
    size_r: int
    size_h: int
    size_ec: int = 1

    def __post_init__(self):
        if self.delta <= 0 or self.c <= 0:
            raise UsageError("delta and c must be positive")
        if not 0 < self.tau < 0.5:
            raise UsageError("tau must lie in (0, 1/2)")

    @property
    def delta1(self) -> float:
        return (self.size_e - self.size_r) * self.delta

    def delta2_from_joint(self, y_size: int) -> float:
        """Conditional constant obtained from joint typicality, (|Y|+1) delta."""
        return (y_size + 1) * self.delta

    @property
    def delta2_codeword(self) -> float:
        """Joint-given-codeword constant, delta / |X_{E^c}|."""
        return self.delta / self.size_ec

    @property
    def delta3(self) -> float:
        return (self.size_h + 1) * 2.0 * self.delta

    def tau_margin(self, epsilon: float, rate: float) -> float:
        """epsilon minus the tau penalty; positive means tau is small enough."""
        t = self.tau
        penalty = t * (log2(self.size_h) + 5) + 4 * t * log2(self.size_h * 2 ** rate / (2 * t))
        return epsilon - penalty

    @classmethod
    def at(cls, n: int, c: float, tau: float, **sizes) -> "TypicalityParams":
        return cls(delta_schedule(n, c), tau, c, **sizes)


# ---------------------------------------------------------------- counting

def _symbols(x) -> np.ndarray:
    if isinstance(x, SequenceU):
        return np.array(x.symbols, dtype=np.int64)
    return np.asarray(x, dtype=np.int64)


def counts(seqs: np.ndarray, alphabet: int) -> np.ndarray:
    """N(a | x^n) for every row of ``seqs`` (or for a single sequence)."""
    seqs = np.atleast_2d(seqs)
    return np.stack([(seqs == a).sum(axis=1) for a in range(alphabet)], axis=-1)


def pair_counts(xs: np.ndarray, ys: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """N(a, b | x^n, y^n), shape (batch, nx, ny)."""
    xs, ys = np.atleast_2d(xs), np.atleast_2d(ys)
    return counts(xs * ny + ys, nx * ny).reshape(-1, nx, ny)


def type_of(x, alphabet: int) -> TypeStats:
    s = _symbols(x)
    if s.size == 0:
        raise UsageError("empty sequence")
    if s.min() < 0 or s.max() >= alphabet:
        raise UsageError(f"symbol outside alphabet of size {alphabet}")
    return TypeStats(tuple(int(v) for v in counts(s, alphabet)[0]), int(s.size))


def cond_type_of(x, y, nx: int | None = None, ny: int | None = None) -> CondTypeStats:
    xs, ys = _symbols(x), _symbols(y)
    if xs.shape != ys.shape:
        raise UsageError(f"length mismatch: {xs.size} vs {ys.size}")
    nx = int(xs.max()) + 1 if nx is None else nx
    ny = int(ys.max()) + 1 if ny is None else ny
    if xs.min() < 0 or xs.max() >= nx or ys.min() < 0 or ys.max() >= ny:
        raise UsageError("symbol outside alphabet")
    return CondTypeStats(pair_counts(xs, ys, nx, ny)[0])


# ------------------------------------------------------ typicality predicates

def typical_mask(cnt: np.ndarray, n: int, p: np.ndarray, delta: float,
                 tol: float = 0.0) -> np.ndarray:
    """Batch test of P-typicality from counts of shape (batch, *alphabet)."""
    p = np.asarray(p, dtype=float)
    axes = tuple(range(1, cnt.ndim))
    close = (np.abs(cnt / n - p) <= delta + tol).all(axis=axes)
    support = ((cnt == 0) | (p > 0)).all(axis=axes)
    return close & support


def cond_typical_mask(joint_cnt: np.ndarray, n: int, w: np.ndarray, delta: float,
                      tol: float = 0.0) -> np.ndarray:
    """Batch test of W-typicality of y given x from N(a, b), shape (batch, nx, ny)."""
    w = np.asarray(w, dtype=float)
    row = joint_cnt.sum(axis=2, keepdims=True)
    close = (np.abs(joint_cnt / n - row / n * w) <= delta + tol).all(axis=(1, 2))
    support = ((joint_cnt == 0) | (w > 0)).all(axis=(1, 2))
    return close & support


def is_typical(x, p, delta: float) -> bool:
    p = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    s = _symbols(x)
    if s.size and (s.min() < 0 or s.max() >= p.size):
        raise UsageError("symbol outside the alphabet of P")
    return bool(typical_mask(counts(s, p.size), s.size, p, delta)[0])


def is_cond_typical(y, x, w, delta: float) -> bool:
    w = w.probs if isinstance(w, Channel) else np.asarray(w, dtype=float)
    xs, ys = _symbols(x), _symbols(y)
    if xs.shape != ys.shape:
        raise UsageError(f"length mismatch: {xs.size} vs {ys.size}")
    return bool(cond_typical_mask(pair_counts(xs, ys, *w.shape), xs.size, w, delta)[0])


# -------------------------------------------------------------- enumeration

def all_sequences(alphabet: int, n: int, budget: int = ENUM_BUDGET) -> np.ndarray:
    """Every sequence of length n, lexicographic."""
    total = float(alphabet) ** n
    if total > budget:
        raise BudgetError(total, budget)
    idx = np.arange(int(total), dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        out[:, i] = idx % alphabet
        idx //= alphabet
    return out


def enumerate_typical(p, delta: float, n: int, budget: int = ENUM_BUDGET) -> np.ndarray:
    """T_delta^n(P) as an array of sequences."""
    p = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    seqs = all_sequences(p.size, n, budget)
    return seqs[typical_mask(counts(seqs, p.size), n, p, delta)]


def enumerate_cond_typical(w, x, delta: float, budget: int = ENUM_BUDGET) -> np.ndarray:
    """T_delta^n(W | x^n) as an array of sequences."""
    w = w.probs if isinstance(w, Channel) else np.asarray(w, dtype=float)
    xs = _symbols(x)
    ys = all_sequences(w.shape[1], xs.size, budget)
    jc = pair_counts(np.broadcast_to(xs, ys.shape), ys, *w.shape)
    return ys[cond_typical_mask(jc, xs.size, w, delta)]


def _compositions(n: int, k: int):
    """Count vectors of length k summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def _multinomial(cnt: Sequence[int]) -> int:
    out, left = 1, sum(cnt)
    for c in cnt:
        out *= comb(left, c)
        left -= c
    return out


def typical_set_size(p, delta: float, n: int) -> int:
    """|T_delta^n(P)| by summing multinomials over typical types."""
    p = np.asarray(p.probs if isinstance(p, Pmf) else p, dtype=float)
    total = 0
    for cnt in _compositions(n, p.size):
        arr = np.array(cnt)[None, :]
        if typical_mask(arr, n, p, delta)[0]:
            total += _multinomial(cnt)
    return total


# ------------------------------------------------------------- lemma checks

@dataclass
class CardinalityRow:
    n: int
    delta: float
    size: int
    gap: float | None       # None when the typical set is empty


@dataclass
class CardinalityReport:
    rows: list[CardinalityRow]
    target_entropy: float

    @property
    def empty_at(self) -> list[int]:
        return [r.n for r in self.rows if r.size == 0]

    @property
    def trend_ok(self) -> bool:
        gaps = [r.gap for r in self.rows if r.gap is not None]
        return len(gaps) < 2 or gaps[-1] <= gaps[0] + 1e-12


def check_lemma_cardinality(p, n_list: Sequence[int], c: float = 1.0, w=None, x=None,
                            budget: int = ENUM_BUDGET) -> CardinalityReport:
    """Realized gap |(1/n) log2 |T| - H| along the delta schedule.

    With ``w`` (and a conditioning sequence generator ``x(n)``) the
    conditional set T(W | x^n) is measured against H(W | P).
    """
    p = np.asarray(p.probs if isinstance(p, Pmf) else p, dtype=float)
    if w is None:
        target = entropy_array(p)
    else:
        w = np.asarray(w.probs if isinstance(w, Channel) else w, dtype=float)
        target = float(sum(p[a] * entropy_array(w[a]) for a in range(p.size)))
    rows = []
    for n in n_list:
        d = delta_schedule(n, c)
        if w is None:
            size = enumerate_typical(p, d, n, budget).shape[0]
        else:
            size = enumerate_cond_typical(w, x(n), d, budget).shape[0]
        gap = None if size == 0 else abs(log2(size) / n - target)
        rows.append(CardinalityRow(n, d, size, gap))
    return CardinalityReport(rows, target)


@dataclass
class ContinuityReport:
    trials: int
    violations: list[tuple[np.ndarray, np.ndarray, float, float]] = field(default_factory=list)
    max_ratio: float = 0.0


def check_lemma_continuity(trials: int, alphabet: int, seed: int = 0) -> ContinuityReport:
    """|H(P) - H(Q)| <= -d log2(d / |X|) on random pairs with d = d_v(P, Q) < 1/2."""
    rng = np.random.default_rng(seed)
    rep = ContinuityReport(trials)
    done = 0
    while done < trials:
        p = rng.dirichlet(np.full(alphabet, rng.uniform(0.1, 2.0)))
        q = rng.dirichlet(np.full(alphabet, rng.uniform(0.1, 2.0)))
        t = 10.0 ** rng.uniform(-8, 0)
        q = (1 - t) * p + t * q
        d = float(np.abs(p - q).sum())
        if not 0 < d < 0.5:
            continue
        done += 1
        lhs = abs(entropy_array(p) - entropy_array(q))
        rhs = entropy_continuity_bound(d, alphabet)
        rep.max_ratio = max(rep.max_ratio, lhs / rhs)
        if lhs > rhs + 1e-12:
            rep.violations.append((p, q, lhs, rhs))
    return rep


@dataclass
class ImplicationReport:
    nx: int
    ny: int
    n: int
    delta: float
    pairs: int
    counterexamples: dict[str, int]

    @property
    def ok(self) -> bool:
        return not any(self.counterexamples.values())


def default_joints(nx: int, ny: int, seed: int = 0) -> list[np.ndarray]:
    """Uniform, a random full-support joint, and one with a structural zero."""
    rng = np.random.default_rng(seed)
    uniform = np.full((nx, ny), 1.0 / (nx * ny))
    rand = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    sparse = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    sparse[0, 0] = 0.0
    sparse /= sparse.sum()
    return [uniform, rand, sparse]


def _conditional(joint: np.ndarray) -> np.ndarray:
    """Rows of P_{Y|X}; rows with P(x) = 0 are set uniform (they never matter)."""
    px = joint.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(px > 0, joint / px, 1.0 / joint.shape[1])


def check_lemma_implications(nx: int, ny: int, n: int, delta: float, joints=None,
                             budget: int = ENUM_BUDGET) -> list[ImplicationReport]:
    """Exhaustively test the three typicality implications over all pairs.

    Conditional typicality of y given x uses W = P_{Y|X}; of x given y uses
    P_{X|Y}. Premises are tested exactly, conclusions with CONCLUSION_TOL.
    """
    total = float(nx) ** n * float(ny) ** n
    if total > budget:
        raise BudgetError(total, budget)
    xs = all_sequences(nx, n)
    ys = all_sequences(ny, n)
    xi = np.repeat(np.arange(len(xs)), len(ys))
    yi = np.tile(np.arange(len(ys)), len(xs))
    reports = []
    for joint in (default_joints(nx, ny) if joints is None else joints):
        joint = np.asarray(joint, dtype=float)
        px, py = joint.sum(axis=1), joint.sum(axis=0)
        w_yx, w_xy = _conditional(joint), _conditional(joint.T)
        cx, cy = counts(xs, nx), counts(ys, ny)
        bad = {"joint_from_marginal_and_conditional": 0, "marginal_from_joint": 0,
               "conditional_from_joint": 0, "joint_from_conditional_on_y": 0}
        chunk = 1 << 20
        for lo in range(0, xi.size, chunk):
            a, b = xi[lo:lo + chunk], yi[lo:lo + chunk]
            jc = pair_counts(xs[a], ys[b], nx, ny)
            x_typ = typical_mask(cx[a], n, px, delta)
            y_typ = typical_mask(cy[b], n, py, delta)
            y_given_x = cond_typical_mask(jc, n, w_yx, delta)
            x_given_y = cond_typical_mask(jc.transpose(0, 2, 1), n, w_xy, delta)
            joint_typ = typical_mask(jc, n, joint, delta)
            tol = CONCLUSION_TOL
            # x typical and y | x typical => joint at 2 delta and y at 2 delta |X|
            prem = x_typ & y_given_x
            concl = (typical_mask(jc, n, joint, 2 * delta, tol)
                     & typical_mask(cy[b], n, py, 2 * delta * nx, tol))
            bad["joint_from_marginal_and_conditional"] += int((prem & ~concl).sum())
            # joint typical => x at |Y| delta and y | x at (|Y|+1) delta
            bad["marginal_from_joint"] += int(
                (joint_typ & ~typical_mask(cx[a], n, px, ny * delta, tol)).sum())
            bad["conditional_from_joint"] += int(
                (joint_typ & ~cond_typical_mask(jc, n, w_yx, (ny + 1) * delta, tol)).sum())
            # y typical and x | y typical => joint at 2 delta (contrapositive form)
            prem = y_typ & x_given_y
            bad["joint_from_conditional_on_y"] += int(
                (prem & ~typical_mask(jc, n, joint, 2 * delta, tol)).sum())
        reports.append(ImplicationReport(nx, ny, n, delta, int(xi.size), bad))
    return reports


@dataclass
class ProbabilityReport:
    n: int
    delta: float
    probability: float
    bound: float
    exact: bool
    std_error: float = 0.0

    @property
    def ok(self) -> bool:
        return self.probability + 3 * self.std_error >= self.bound - 1e-12


def _type_probability(cnt: tuple[int, ...], p: np.ndarray) -> float:
    if any(c > 0 and q == 0 for c, q in zip(cnt, p)):
        return 0.0
    return _multinomial(cnt) * float(np.prod([q ** c for c, q in zip(cnt, p)]))


def typical_probability(p, delta: float, n: int) -> float:
    """Pr{X^n in T_delta^n(P)} exactly, grouping sequences by type."""
    p = np.asarray(p.probs if isinstance(p, Pmf) else p, dtype=float)
    total = 0.0
    for cnt in _compositions(n, p.size):
        if typical_mask(np.array(cnt)[None, :], n, p, delta)[0]:
            total += _type_probability(cnt, p)
    return total


def check_lemma_probability(p, n: int, delta: float, w=None, trials: int = 0,
                            seed: int = 0, budget: int = ENUM_BUDGET) -> list[ProbabilityReport]:
    """Typical-set probability against 1 - 2|X| e^{-2 delta^2 n}.

    Unconditional: one row, exact (or Monte Carlo with ``trials`` > 0).
    Conditional (``w`` given): one row per conditioning type of x^n, since
    the probability depends on x^n only through its type; rows are computed
    by enumerating y^n.
    """
    p = np.asarray(p.probs if isinstance(p, Pmf) else p, dtype=float)
    nx = p.size
    if w is None:
        bound = 1 - 2 * nx * exp(-2 * delta ** 2 * n)
        if trials > 0:
            rng = np.random.default_rng(seed)
            seqs = rng.choice(nx, size=(trials, n), p=p)
            hit = typical_mask(counts(seqs, nx), n, p, delta).mean()
            se = sqrt(max(hit * (1 - hit), 1e-300) / trials)
            return [ProbabilityReport(n, delta, float(hit), bound, False, se)]
        return [ProbabilityReport(n, delta, typical_probability(p, delta, n), bound, True)]

    w = np.asarray(w.probs if isinstance(w, Channel) else w, dtype=float)
    ny = w.shape[1]
    bound = 1 - 2 * nx * ny * exp(-2 * delta ** 2 * n)
    ys = all_sequences(ny, n, budget)
    out = []
    for cnt in _compositions(n, nx):
        x = np.repeat(np.arange(nx), cnt)       # one representative per type
        jc = pair_counts(np.broadcast_to(x, ys.shape), ys, nx, ny)
        logp = np.log(np.maximum(w[x[None, :], ys], 1e-300)).sum(axis=1)
        prob = np.where((w[x[None, :], ys] > 0).all(axis=1), np.exp(logp), 0.0)
        hit = float(prob[cond_typical_mask(jc, n, w, delta)].sum())
        out.append(ProbabilityReport(n, delta, hit, bound, True))
    return out


@dataclass
class ScheduleReport:
    ns: list[int]
    deltas: list[float]
    scaled: list[float]

    @property
    def vanishing(self) -> bool:
        """delta decreases once past its peak and ends far below it."""
        d = self.deltas
        peak = int(np.argmax(d))
        tail = d[peak:]
        return all(b < a for a, b in zip(tail, tail[1:])) and d[-1] < 0.1 * d[peak]

    @property
    def scaled_diverges(self) -> bool:
        s = self.scaled
        return all(b > a for a, b in zip(s, s[1:]))


def check_delta_schedule(c: float = 1.0, max_log2: int = 20) -> ScheduleReport:
    ns = [2 ** k for k in range(1, max_log2 + 1)]
    ds = [delta_schedule(n, c) for n in ns]
    return ScheduleReport(ns, ds, [sqrt(n) * d for n, d in zip(ns, ds)])
