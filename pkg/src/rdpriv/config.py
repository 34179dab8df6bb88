"""JSON experiment configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import EncodedSet, SourceModel, validate
from .probcore import ValidationError
from .region.params import SolverParams


class ConfigError(ValueError):
    def __init__(self, findings: list[str]):
        super().__init__("; ".join(findings))
        self.findings = findings


@dataclass(frozen=True)
class Case:
    label: str
    encoded: EncodedSet


@dataclass(frozen=True)
class SimulationSpec:
    case: str
    distortion: float
    n: tuple[int, ...] = (4, 6, 8, 10)
    rate: float | None = None
    rate_margin: float = 0.5
    c: float = 0.1
    tau: float = 0.1
    trials: int = 0


@dataclass(frozen=True)
class VerifySpec:
    lemma_matrix: tuple[tuple[int, int, int, float], ...] = (
        (2, 2, 6, 0.1), (2, 2, 8, 0.1), (3, 2, 4, 0.15), (3, 2, 5, 0.15))
    probability_n: tuple[int, ...] = (4, 8, 12)
    continuity_trials: int = 10_000
    convexity_trials: int = 100
    inclusion: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    source: SourceModel
    cases: tuple[Case, ...]
    d_grid: tuple[float, ...]
    table_d: tuple[float, ...]
    solver: SolverParams
    simulation: SimulationSpec | None
    verify: VerifySpec
    seed: int = 0
    notes: str = ""

    def case(self, label: str) -> Case:
        for c in self.cases:
            if c.label == label:
                return c
        raise ConfigError([f"unknown case label {label!r}"])


def _grid(spec) -> tuple[float, ...]:
    if isinstance(spec, dict):
        return tuple(float(x) for x in np.linspace(spec["start"], spec["stop"], int(spec["num"])))
    return tuple(float(x) for x in spec)


def parse(doc: dict) -> ExperimentConfig:
    findings: list[str] = []
    try:
        s = doc["source"]
        src = SourceModel.build(s["sizes"], s["revealed"], s["hidden"], s["joint"],
                                s.get("distortion"), s.get("recon_size"))
    except KeyError as exc:
        raise ConfigError([f"source: missing field {exc}"]) from None
    except ValidationError as exc:
        raise ConfigError([f"source: {exc}"]) from None
    findings += validate(src)

    cases = []
    for i, c in enumerate(doc.get("cases", [])):
        try:
            case = Case(str(c.get("label", f"case{i}")), EncodedSet(tuple(c["encoded"])))
        except (KeyError, TypeError):
            findings.append(f"cases[{i}]: needs an 'encoded' list")
            continue
        findings += [f"case {case.label}: {m}" for m in validate(src, case.encoded)
                     if m.startswith("encoded")]
        cases.append(case)
    if not cases:
        findings.append("cases: at least one encoded set is required")
    if len({c.label for c in cases}) != len(cases):
        findings.append("cases: labels must be unique")

    try:
        solver = SolverParams(**doc.get("solver", {}))
    except (TypeError, ValueError) as exc:
        findings.append(f"solver: {exc}")
        solver = SolverParams()

    d_grid = _grid(doc.get("d_grid", {"start": 0.0, "stop": src.d_max, "num": 20}))
    table_d = _grid(doc.get("table_d", d_grid))
    for name, grid in (("d_grid", d_grid), ("table_d", table_d)):
        if any(d < 0 or d > src.d_max for d in grid):
            findings.append(f"{name}: values must lie in [0, {src.d_max}]")

    sim = None
    if "simulation" in doc:
        raw = dict(doc["simulation"])
        if "n" in raw:
            raw["n"] = tuple(int(v) for v in raw["n"])
        try:
            sim = SimulationSpec(**raw)
        except TypeError as exc:
            findings.append(f"simulation: {exc}")
        else:
            if sim.case not in {c.label for c in cases}:
                findings.append(f"simulation: unknown case {sim.case!r}")
            if any(n < 2 for n in sim.n):
                findings.append("simulation: every n must be >= 2")

    ver = VerifySpec()
    if "verify" in doc:
        raw = dict(doc["verify"])
        for key in ("lemma_matrix", "inclusion"):
            if key in raw:
                raw[key] = tuple(tuple(row) for row in raw[key])
        if "probability_n" in raw:
            raw["probability_n"] = tuple(raw["probability_n"])
        try:
            ver = VerifySpec(**raw)
        except TypeError as exc:
            findings.append(f"verify: {exc}")
        labels = {c.label for c in cases}
        for a, b in ver.inclusion:
            if a not in labels or b not in labels:
                findings.append(f"verify.inclusion: unknown case in ({a}, {b})")

    if findings:
        raise ConfigError(findings)
    return ExperimentConfig(src, tuple(cases), d_grid, table_d, solver, sim, ver,
                            int(doc.get("seed", 0)), str(doc.get("notes", "")))


def load(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    return parse(doc)
