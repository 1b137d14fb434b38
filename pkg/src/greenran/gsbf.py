"""Bi-section group sparse beamforming.

Stage 1 solves a weighted group-norm relaxation, stage 2 ranks RRHs by how
little they carry, stage 3 binary-searches the number of active RRHs along
that ranking and keeps the cheapest feasible prefix. Stages 2 and 3 are
reused by the l2-box and relaxed-MIP pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import conic
from .conic import SolverError, SolverSettings, SolveStatus
from .model import Beamformer, Channel, Selection, SystemConfig, network_power
from .result import AlgoResult, AlgoStatus, InfeasibleError


@dataclass(frozen=True)
class Ordering:
    perm: tuple[int, ...]  # deactivation priority, first entry is switched off first
    theta: tuple[float, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    def active(self, J: int) -> tuple[int, ...]:
        """The J RRHs that are hardest to remove."""
        L = len(self.perm)
        return tuple(sorted(self.perm[L - J :])) if J > 0 else ()

    @classmethod
    def from_keys(cls, keys: Sequence, theta: Sequence[float]) -> "Ordering":
        perm = sorted(range(len(keys)), key=lambda l: (keys[l], l))
        return cls(tuple(perm), tuple(float(t) for t in theta))


def default_weights(cfg: SystemConfig) -> np.ndarray:
    return np.sqrt(np.asarray(cfg.P_fronthaul_l) / np.asarray(cfg.eta_l))


def stage1_group_norm(
    cfg: SystemConfig, ch: Channel, weights: Sequence[float], settings: SolverSettings | None = None
) -> Beamformer:
    p = conic.build_group_norm(cfg, ch, weights)
    r = conic.solve(p, settings)
    if r.status is SolveStatus.INFEASIBLE:
        raise InfeasibleError("SINR targets unreachable with every RRH active")
    if not r.ok:
        raise SolverError(r, p.label)
    return conic.decode_beamformer(cfg, p, r.x)


def ordering(cfg: SystemConfig, v: Beamformer) -> Ordering:
    theta = v.group_norms() * np.sqrt(np.asarray(cfg.eta_l) / np.asarray(cfg.P_fronthaul_l))
    return Ordering.from_keys(list(theta), theta)


@dataclass
class _Support:
    power: float
    v: Beamformer


def solve_support(
    cfg: SystemConfig, ch: Channel, active: Sequence[int], settings: SolverSettings | None = None
) -> _Support | None:
    """Minimum-power beamformer for a fixed RRH set, or None when infeasible."""
    p = conic.build_fixed_support(cfg, ch, active)
    r = conic.solve(p, settings)
    if r.status is SolveStatus.INFEASIBLE:
        return None
    if not r.ok:
        raise SolverError(r, p.label)
    v = conic.decode_beamformer(cfg, p, r.x)
    return _Support(network_power(cfg, Selection.from_active(cfg.L, active), v), v)


def bisection_selection(
    cfg: SystemConfig, ch: Channel, order: Ordering, settings: SolverSettings | None = None
) -> AlgoResult:
    if len(order.perm) != cfg.L:
        raise ValueError("ordering does not match the number of RRHs")
    cache: dict[int, _Support | None] = {}

    def at(J: int) -> _Support | None:
        if J not in cache:
            cache[J] = solve_support(cfg, ch, order.active(J), settings)
        return cache[J]

    if at(cfg.L) is None:
        return AlgoResult.infeasible(solver_calls=len(cache))
    lo, hi = 0, cfg.L
    while lo < hi:
        mid = (lo + hi) // 2
        if at(mid) is not None:
            hi = mid
        else:
            lo = mid + 1
    j_star = lo
    bisection_calls = len(cache)
    best_J = None
    for J in range(j_star, cfg.L + 1):
        sol = at(J)
        if sol is not None and (best_J is None or sol.power < cache[best_J].power - 1e-9):
            best_J = J
    best = cache[best_J]
    active = order.active(best_J)
    return AlgoResult(
        active_set=active,
        z_final=Selection.from_active(cfg.L, active),
        v_final=best.v,
        power_w=best.power,
        status=AlgoStatus.CONVERGED,
        solver_calls=len(cache),
        info={"j_star": j_star, "best_J": best_J, "bisection_calls": bisection_calls},
    )


def run_gsbf(cfg: SystemConfig, ch: Channel, settings: SolverSettings | None = None) -> AlgoResult:
    try:
        v = stage1_group_norm(cfg, ch, default_weights(cfg), settings)
    except InfeasibleError:
        return AlgoResult.infeasible(solver_calls=1)
    res = bisection_selection(cfg, ch, ordering(cfg, v), settings)
    res.solver_calls += 1
    return res
