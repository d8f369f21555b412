"""Per-iteration convergence records and the common solve result."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["IterationRow", "ConvergenceRecord", "SolveResult",
           "CONVERGED", "MAXIT", "BREAKDOWN"]

CONVERGED = "converged"
MAXIT = "maxit"
BREAKDOWN = "breakdown"


@dataclass
class IterationRow:
    k: int
    est_residual: float
    true_residual: float | None = None
    transfer_defined: bool | None = None
    elapsed: float = 0.0


@dataclass
class ConvergenceRecord:
    """Ordered per-iteration residual history plus the termination reason."""

    rows: list[IterationRow] = field(default_factory=list)
    reason: str | None = None

    def append(self, k, est_residual, true_residual=None,
               transfer_defined=None, elapsed=0.0) -> None:
        if self.rows and k <= self.rows[-1].k:
            raise ValueError("iteration indices must be strictly increasing")
        if est_residual < 0 or (true_residual is not None and true_residual < 0):
            raise ValueError("residual norms must be nonnegative")
        self.rows.append(IterationRow(int(k), float(est_residual),
                                      None if true_residual is None else float(true_residual),
                                      transfer_defined, float(elapsed)))

    def finalize(self, reason: str) -> None:
        self.reason = reason

    def __len__(self) -> int:
        return len(self.rows)

    def est_residuals(self) -> np.ndarray:
        return np.array([r.est_residual for r in self.rows])

    def true_residuals(self) -> np.ndarray:
        return np.array([np.nan if r.true_residual is None else r.true_residual
                         for r in self.rows])


@dataclass
class SolveResult:
    """Outcome of one solver run.

    ``x``/``y`` is the iterate of the monitored method at termination.  The
    GPBiLQ driver also fills ``x_l``/``y_l`` (always defined) and
    ``x_c``/``y_c`` (last step at which the transfer existed, or None).
    """

    x: np.ndarray
    y: np.ndarray
    iterations: int
    reason: str
    residual: float
    record: ConvergenceRecord
    breakdown: object | None = None
    x_l: np.ndarray | None = None
    y_l: np.ndarray | None = None
    x_c: np.ndarray | None = None
    y_c: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.reason == CONVERGED
