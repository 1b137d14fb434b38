"""Result type shared by every RRH-selection algorithm."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import Beamformer, Selection


class InfeasibleError(RuntimeError):
    """No beamformer meets the SINR targets under the given RRH constraints."""


class AlgoStatus(str, enum.Enum):
    CONVERGED = "Converged"
    OUTER_LIMIT = "OuterLimit"
    NODE_LIMIT = "NodeLimit"
    INFEASIBLE = "Infeasible"


@dataclass
class TraceRow:
    t: int
    lam: float
    residual: float
    tol1: float  # log10 ||z^{t+1} - z^t||_2
    tol2: float  # log10 ||v^{t+1} - v^t||_F
    lagrangian: float
    inner: list[float] = field(default_factory=list)  # Lagrangian after each inner solve


@dataclass
class AlgoResult:
    active_set: tuple[int, ...]
    z_final: Selection | None
    v_final: Beamformer | None
    power_w: float
    status: AlgoStatus
    outer_iterations: int = 0
    inner_solves: int = 0
    solver_calls: int = 0
    trace: list[TraceRow] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status is not AlgoStatus.INFEASIBLE

    @classmethod
    def infeasible(cls, solver_calls: int = 0, **kw) -> "AlgoResult":
        return cls((), None, None, float(np.nan), AlgoStatus.INFEASIBLE, solver_calls=solver_calls, **kw)
