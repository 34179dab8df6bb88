"""Run configured experiments and render their output.

Work is split into independent tasks (one per distortion level for the
leakage computations, one per case for R(D) sweeps) and dispatched to a
thread pool. No task reads another's result, and rows are assembled in
sorted order afterwards, so the output does not depend on the pool size.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import isfinite, isnan

import numpy as np

from . import codec, typicality
from .config import Case, ExperimentConfig
from .model import lift_between
from .probcore import BudgetError
from .region import objectives as obj
from .region.blahut import rd_sweep
from .region.checks import convexity_certificate, inclusion_check
from .region.leakage import min_leakage_case, rate_at_min_leakage
from .region.oracle import GridTable
from .region.params import InfeasibleError, SolverError

CURVE_COLUMNS = ("case", "D", "value", "status", "witness_hash")
TABLE_COLUMNS = ("case", "D", "leakage", "rate", "status", "witness_hash")
ORACLE_COLUMNS = ("oracle_leakage", "oracle_rate", "oracle_bound", "oracle_status")


def fmt(x) -> str:
    """9 significant digits; negative zero prints as 0."""
    if x is None:
        return ""
    x = float(x)
    if isnan(x):
        return "nan"
    s = f"{x:.9g}"
    return "0" if s in ("-0", "0") else s


def fingerprint(w: np.ndarray | None) -> str:
    if w is None:
        return ""
    r = np.round(np.asarray(w, dtype=float), 9) + 0.0     # + 0.0 folds -0 into 0
    h = hashlib.sha256(str(r.shape).encode())
    h.update(np.ascontiguousarray(r).tobytes())
    return h.hexdigest()[:16]


@dataclass
class Output:
    text: str
    failed: bool = False        # some row carries a non-convergence status


def _pool_map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _ordered(cases: tuple[Case, ...]) -> list[Case]:
    return sorted(cases, key=lambda c: (len(c.encoded.encoded), c.encoded.encoded))


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    wr.writerows(rows)
    return buf.getvalue()


def _sort_rows(rows: list[dict], labels: list[str]) -> list[dict]:
    rank = {lab: i for i, lab in enumerate(labels)}
    return sorted(rows, key=lambda r: (rank[r["case"]], r["D"]))


# ------------------------------------------------------------------ leakage

def _leakage_walk(cfg: ExperimentConfig, d: float, with_rate: bool) -> list[dict]:
    """All cases at one distortion, warm-starting each from a smaller case."""
    src, params = cfg.source, cfg.solver
    done: list[tuple[Case, np.ndarray]] = []
    rows = []
    for case in _ordered(cfg.cases):
        arrays = src.view(case.encoded)
        warm = None
        for prev, w in reversed(done):
            if set(prev.encoded.encoded) <= set(case.encoded.encoded):
                warm = lift_between(w, src, prev.encoded, case.encoded)
                break
        row = {"case": case.label, "D": d, "leakage": float("nan"), "rate": float("nan"),
               "channel": None}
        try:
            lres = min_leakage_case(arrays, d, params, warm)
        except InfeasibleError:
            row["status"] = "infeasible"
            rows.append(row)
            continue
        except SolverError:
            row["status"] = "not_converged"
            rows.append(row)
            continue
        done.append((case, lres.channel))
        row.update(leakage=lres.value, channel=lres.channel, status=lres.status)
        if with_rate:
            rres = rate_at_min_leakage(src, case.encoded, d, lres, params)
            row.update(rate=rres.rate, channel=rres.channel)
        rows.append(row)
    return rows


def _flatten(results: list[list[dict]]) -> list[dict]:
    return [r for rows in results for r in rows]


def curve(cfg: ExperimentConfig, kind: str, threads: int = 1) -> Output:
    labels = [c.label for c in cfg.cases]
    if kind == "ld":
        rows = _flatten(_pool_map(lambda d: _leakage_walk(cfg, d, False), cfg.d_grid, threads))
        for r in rows:
            r["value"] = r["leakage"]
    elif kind == "rd":
        rows = _flatten(_pool_map(lambda c: _rd_rows(cfg, c), cfg.cases, threads))
    else:
        raise ValueError(f"unknown curve kind {kind!r}")
    rows = _sort_rows(rows, labels)
    out = [(r["case"], fmt(r["D"]), fmt(r["value"]), r["status"], fingerprint(r["channel"]))
           for r in rows]
    return Output(_csv(CURVE_COLUMNS, out), any(r["status"] == "not_converged" for r in rows))


def _rd_rows(cfg: ExperimentConfig, case: Case) -> list[dict]:
    arrays = cfg.source.view(case.encoded)
    try:
        sweep = rd_sweep(arrays, cfg.d_grid, cfg.solver)
    except SolverError:
        return [{"case": case.label, "D": d, "value": float("nan"), "status": "not_converged",
                 "channel": None} for d in cfg.d_grid]
    rows = []
    for d, v in zip(cfg.d_grid, sweep(cfg.d_grid)):
        w = sweep.witness(d)
        status = "infeasible" if w is None else ("exact" if v == 0.0 else "ok")
        rows.append({"case": case.label, "D": d, "value": float(v), "status": status,
                     "channel": w})
    return rows


def table(cfg: ExperimentConfig, threads: int = 1, grid_step: float | None = None) -> Output:
    labels = [c.label for c in cfg.cases]
    tables: dict[str, GridTable | None] = {}
    if grid_step is not None:
        for c in cfg.cases:
            try:
                tables[c.label] = GridTable(cfg.source.view(c.encoded), grid_step)
            except BudgetError:
                tables[c.label] = None
    rows = _sort_rows(_flatten(_pool_map(lambda d: _leakage_walk(cfg, d, True),
                                         cfg.table_d, threads)), labels)
    out = []
    for r in rows:
        line = [r["case"], fmt(r["D"]), fmt(r["leakage"]), fmt(r["rate"]), r["status"],
                fingerprint(r["channel"])]
        if grid_step is not None:
            grid = tables[r["case"]]
            if grid is None:
                line += ["nan", "nan", "nan", "over_budget"]
            else:
                try:
                    o = grid.solve(r["D"])
                    line += [fmt(o.leakage), fmt(o.rate), fmt(o.bound), "ok"]
                except ValueError:
                    line += ["nan", "nan", "nan", "infeasible"]
        out.append(line)
    cols = TABLE_COLUMNS + (ORACLE_COLUMNS if grid_step is not None else ())
    return Output(_csv(cols, out), any(r["status"] == "not_converged" for r in rows))


# ---------------------------------------------------------------- simulate

def _clean(x):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def trend(values: list[float]) -> dict:
    """Nonincreasing-trend test: last value no larger than the first, over >= 4 points."""
    vals = [v for v in values if v is not None]
    if len(vals) < 4:
        return {"values": vals, "status": "insufficient_points"}
    return {"values": vals, "first": vals[0], "last": vals[-1],
            "status": "pass" if vals[-1] <= vals[0] else "fail"}


def simulate(cfg: ExperimentConfig, seed: int, threads: int = 1) -> dict:
    sim = cfg.simulation
    if sim is None:
        raise ValueError("config has no 'simulation' section")
    src, case = cfg.source, cfg.case(sim.case)
    e = case.encoded
    arrays = src.view(e)
    lres = min_leakage_case(arrays, sim.distortion, cfg.solver)
    w = rate_at_min_leakage(src, e, sim.distortion, lres, cfg.solver).channel
    i_e = obj.rate(arrays, w)
    rate = sim.rate if sim.rate is not None else i_e + sim.rate_margin
    targets = codec.single_letter_targets(src, e, w)

    def run(n: int) -> dict:
        delta = typicality.delta_schedule(n, sim.c)
        row = {"n": n, "delta": delta}
        try:
            cb = codec.generate_codebook(src, e, w, n, rate, delta, seed)
        except codec.EmptyTypicalSetError:
            row["status"] = "empty_typical_set"
            return row
        row["m"] = cb.m
        try:
            meas, det = codec.measure_exact(src, e, w, cb)
        except BudgetError:
            if sim.trials < 1:
                raise
            mc = codec.measure_mc(src, e, w, cb, sim.trials, seed)
            row.update(status="ok", mode=mc.mode, r_n=mc.r_n, u_n=mc.u_n,
                       u_std_error=mc.u_std_error,
                       u_gap=mc.u_n - targets["expected_distortion"])
            return row
        rep = codec.check_achievability_bounds(src, e, w, cb, sim.tau, (meas, det))
        lo, hi = targets["equivocation_floor"] - 1e-9, targets["h_hidden"] + 1e-9
        row.update(
            status="ok", mode=meas.mode, r_n=meas.r_n, u_n=meas.u_n, e_n=meas.e_n,
            l_n=meas.l_n, u_gap=meas.u_n - targets["expected_distortion"],
            e_gap=targets["equivocation"] - meas.e_n,
            e_n_in_range=bool(lo <= meas.e_n <= hi),
            exact_checks_pass=rep.exact_ok,
            bounds=[{"name": b.name, "lhs": b.lhs, "rhs": b.rhs, "exact": b.exact,
                     "status": b.status} for b in rep.checks])
        return row

    rows = _pool_map(run, sorted(sim.n), threads)
    exact = [r for r in rows if r.get("mode") == "exact"]
    return {
        "case": case.label,
        "distortion": sim.distortion,
        "seed": seed,
        "rate": rate,
        "channel": w,
        "channel_hash": fingerprint(w),
        "min_leakage": lres.value,
        "single_letter": targets | {"rate": i_e},
        "c": sim.c,
        "tau": sim.tau,
        "per_n": rows,
        "trend": {"u_gap": trend([r["u_gap"] for r in exact]),
                  "e_gap": trend([r["e_gap"] for r in exact])},
        "exact_checks_pass": all(r["exact_checks_pass"] and r["e_n_in_range"] for r in exact),
    }


# ------------------------------------------------------------------ verify

PROBABILITY_DELTAS = (0.05, 0.1, 0.2, 0.3)


def verify(cfg: ExperimentConfig, seed: int, threads: int = 1) -> dict:
    v = cfg.verify
    src = cfg.source

    def implication(spec):
        nx, ny, n, delta = spec
        reps = typicality.check_lemma_implications(int(nx), int(ny), int(n), float(delta))
        return {"nx": nx, "ny": ny, "n": n, "delta": delta,
                "pairs": sum(r.pairs for r in reps),
                "counterexamples": {k: sum(r.counterexamples[k] for r in reps)
                                    for k in reps[0].counterexamples},
                "pass": all(r.ok for r in reps)}

    impl = _pool_map(implication, v.lemma_matrix, threads)

    rng = np.random.default_rng(seed)
    p_bin = rng.dirichlet(np.ones(2))
    w_bin = rng.dirichlet(np.ones(2), size=2)
    prob_rows = []
    for n in v.probability_n:
        for delta in PROBABILITY_DELTAS:
            for kind, reps in (
                    ("marginal", typicality.check_lemma_probability(p_bin, n, delta)),
                    ("conditional", typicality.check_lemma_probability(p_bin, n, delta, w_bin))):
                prob_rows.append({"n": n, "delta": delta, "kind": kind,
                                  "min_probability": min(r.probability for r in reps),
                                  "bound": reps[0].bound, "pass": all(r.ok for r in reps)})

    cont = typicality.check_lemma_continuity(v.continuity_trials, 3, seed)
    sched = typicality.check_delta_schedule()
    card = typicality.check_lemma_cardinality(p_bin, [4, 8, 12, 16])

    def convexity(case: Case):
        rep = convexity_certificate(src, case.encoded, v.convexity_trials, cfg.solver, seed)
        return {"case": case.label, "trials": len(rep.trials),
                "solver_members": sum(t.solver_member for t in rep.trials),
                "failures": len(rep.failures), "pass": rep.ok}

    conv = _pool_map(convexity, cfg.cases, threads) if v.convexity_trials > 0 else []
    incl = []
    for a, b in v.inclusion:
        rep = inclusion_check(src, cfg.case(a).encoded, cfg.case(b).encoded, cfg.d_grid,
                              cfg.solver)
        incl.append({"small": a, "big": b, "D": rep.d_grid, "small_leakage": rep.small,
                     "big_leakage": rep.big, "violations": len(rep.violations),
                     "pass": rep.ok})

    exact_pass = (all(r["pass"] for r in impl) and all(r["pass"] for r in prob_rows)
                  and not cont.violations)
    return {
        "seed": seed,
        "implications": impl,
        "typical_probability": prob_rows,
        "continuity": {"trials": cont.trials, "violations": len(cont.violations),
                       "max_ratio": cont.max_ratio, "pass": not cont.violations},
        "delta_schedule": {"vanishing": sched.vanishing,
                           "scaled_diverges": sched.scaled_diverges},
        "cardinality": {"target_entropy": card.target_entropy,
                        "rows": [{"n": r.n, "delta": r.delta, "size": r.size, "gap": r.gap}
                                 for r in card.rows],
                        "empty_at": card.empty_at, "trend_pass": card.trend_ok},
        "convexity": conv,
        "inclusion": incl,
        "exact_checks_pass": exact_pass,
        "pass": exact_pass and all(c["pass"] for c in conv) and all(i["pass"] for i in incl),
    }
