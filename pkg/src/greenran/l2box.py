"""MM dual ascent on the l2-box reformulation of RRH selection.

The binary selection vector is replaced by ``z in [0,1]^L`` together with the
sphere ``||z - 1/2||^2 = L/4``. The sphere is dualized with a nonnegative
multiplier; for a fixed multiplier the Lagrangian is a difference of convex
functions, minimized inexactly by a few majorization-minimization steps that
each solve one SOCP. After the outer loop the group norms of the final
beamformer order the RRHs for the bi-section selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import conic
from .conic import SolverError, SolverSettings, SolveStatus
from .gsbf import Ordering, bisection_selection
from .model import Beamformer, Channel, Selection, SystemConfig, network_power, sphere_residual
from .result import AlgoResult, AlgoStatus, InfeasibleError, TraceRow


@dataclass(frozen=True)
class L2BoxSettings:
    eps1: float = 1e-5
    eps2: float = 1e-2
    eps3: float = 1e-3
    lambda0: float = 0.1
    alpha0: float = 10.0
    max_outer: int = 50
    max_inner: int = 3
    stop_rule: str = "both"  # "both": dual and primal converged; "either": one suffices

    def __post_init__(self):
        if self.stop_rule not in ("both", "either"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")
        if min(self.eps1, self.eps2, self.eps3) <= 0:
            raise ValueError("tolerances must be positive")
        if self.lambda0 <= 0 or self.alpha0 <= 0:
            raise ValueError("lambda0 and alpha0 must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be >= 1")


def lagrangian(cfg: SystemConfig, z, v: Beamformer, lam: float) -> float:
    return network_power(cfg, z, v) + lam * sphere_residual(z)


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else -math.inf


def _solve_or_raise(p: conic.ConeProgram, settings: SolverSettings | None) -> conic.SolveResult:
    r = conic.solve(p, settings)
    if r.status is SolveStatus.INFEASIBLE:
        raise InfeasibleError(f"{p.label} program infeasible")
    if not r.ok:
        raise SolverError(r, p.label)
    return r


def initialize(cfg: SystemConfig, ch: Channel, settings: SolverSettings | None = None) -> tuple[Selection, Beamformer]:
    """Start from the box relaxation (sphere constraint dropped)."""
    p = conic.build_relaxed(cfg, ch)
    r = _solve_or_raise(p, settings)
    return Selection.relaxed(conic.decode_selection(cfg, p, r.x)), conic.decode_beamformer(cfg, p, r.x)


def inner_mm(
    cfg: SystemConfig,
    ch: Channel,
    lam: float,
    z_start: Selection,
    v_start: Beamformer,
    eps1: float,
    max_inner: int,
    settings: SolverSettings | None = None,
    history: list[float] | None = None,
) -> tuple[Selection, Beamformer, int]:
    """A few MM steps on the Lagrangian at fixed ``lam``.

    Each step minimizes the surrogate whose concave part is linearized at the
    previous ``z``. ``history`` (if given) receives the Lagrangian at the start
    point and after every step.
    """
    if lam < 0:
        raise ValueError("multiplier must be nonnegative")
    z, v = z_start, v_start
    if history is not None:
        history.append(lagrangian(cfg, z, v, lam))
    count = 0
    while count < max_inner:
        p = conic.build_surrogate(cfg, ch, lam, z)
        r = _solve_or_raise(p, settings)
        count += 1
        z_new = Selection.relaxed(conic.decode_selection(cfg, p, r.x))
        v_new = conic.decode_beamformer(cfg, p, r.x)
        step = np.linalg.norm(z_new.z - z.z) + np.linalg.norm(v_new.v - v.v)
        z, v = z_new, v_new
        if history is not None:
            history.append(lagrangian(cfg, z, v, lam))
        if step < eps1:
            break
    return z, v, count


def dual_step(lam: float, z, alpha: float) -> float:
    if alpha <= 0:
        raise ValueError("step size must be positive")
    return lam + alpha * sphere_residual(z)


def l2box_ordering(cfg: SystemConfig, z: Selection, v: Beamformer) -> Ordering:
    """RRHs with z below 1/2 go first, then by normalized group norm."""
    theta = v.group_norms() * np.sqrt(np.asarray(cfg.eta_l) / np.asarray(cfg.P_fronthaul_l))
    keys = [(bool(z.z[l] >= 0.5), float(theta[l])) for l in range(cfg.L)]
    return Ordering.from_keys(keys, theta)


def run_l2box(
    cfg: SystemConfig,
    ch: Channel,
    settings: L2BoxSettings | None = None,
    solver: SolverSettings | None = None,
) -> AlgoResult:
    settings = settings or L2BoxSettings()
    try:
        z, v = initialize(cfg, ch, solver)
    except InfeasibleError:
        return AlgoResult.infeasible(solver_calls=1)
    calls = 1
    lam = settings.lambda0
    trace: list[TraceRow] = []
    status = AlgoStatus.OUTER_LIMIT
    for t in range(settings.max_outer):
        history: list[float] = []
        z_new, v_new, n = inner_mm(cfg, ch, lam, z, v, settings.eps1, settings.max_inner, solver, history)
        calls += n
        dz = float(np.linalg.norm(z_new.z - z.z))
        dv = float(np.linalg.norm(v_new.v - v.v))
        residual = sphere_residual(z_new)
        lam_next = dual_step(lam, z_new, settings.alpha0)
        trace.append(TraceRow(t, lam, residual, _log10(dz), _log10(dv), lagrangian(cfg, z_new, v_new, lam), history))
        z, v = z_new, v_new
        dual_ok = abs(lam_next - lam) < settings.eps2
        primal_ok = dz + dv < settings.eps3
        done = (dual_ok and primal_ok) if settings.stop_rule == "both" else (dual_ok or primal_ok)
        lam = lam_next
        if done:
            status = AlgoStatus.CONVERGED
            break
    inner = calls - 1

    res = bisection_selection(cfg, ch, l2box_ordering(cfg, z, v), solver)
    res.solver_calls += calls
    res.outer_iterations = len(trace)
    res.inner_solves = inner
    res.trace = trace
    res.info.update(lambda_final=lam, z_relaxed=z.z.copy())
    if res.feasible:
        res.status = status
    return res
