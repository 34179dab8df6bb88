from __future__ import annotations

from dataclasses import dataclass


class SolverError(RuntimeError):
    """A solver stopped without meeting its convergence criterion."""

    def __init__(self, message: str, gap: float = float("nan")):
        super().__init__(f"{message} (final gap {gap:.3g})")
        self.gap = gap


class InfeasibleError(ValueError):
    """The requested distortion is below the smallest achievable one."""


@dataclass(frozen=True)
class SolverParams:
    objective_tol: float = 1e-9
    max_iters: int = 20000
    restarts: int = 16
    grid_step: float = 0.02
    lex_slack: float = 1e-7
    curve_tol: float = 1e-7     # accepted Lagrangian gap on a hull vertex (nats)

    def __post_init__(self):
        for name in ("objective_tol", "max_iters", "restarts", "grid_step", "lex_slack", "curve_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"solver parameter {name} must be positive")
        if self.grid_step > 0.25:
            raise ValueError("grid_step must be <= 0.25")
