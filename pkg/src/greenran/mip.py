"""Exact and relaxed baselines for the RRH-selection MIP.

``enumerate_optimal`` is ground truth for small networks; ``branch_and_bound``
reaches the same optimum by best-first search over the box relaxation;
``run_rmip`` rounds the relaxation through the bi-section selection.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .conic import SolverError, SolverSettings, SolveStatus
from .gsbf import Ordering, bisection_selection, solve_support
from .model import Channel, Selection, SystemConfig
from .result import AlgoResult, AlgoStatus

MAX_ENUM_L = 16


def enumerate_optimal(cfg: SystemConfig, ch: Channel, settings: SolverSettings | None = None) -> AlgoResult:
    if cfg.L > MAX_ENUM_L:
        raise ValueError(f"enumeration over 2^{cfg.L} subsets refused (limit L <= {MAX_ENUM_L})")
    subsets = sorted(
        (s for r in range(cfg.L + 1) for s in itertools.combinations(range(cfg.L), r)),
    )
    best, best_set = None, None
    for s in subsets:
        sol = solve_support(cfg, ch, s, settings)
        if sol is not None and (best is None or sol.power < best.power - 1e-9):
            best, best_set = sol, s
    if best is None:
        return AlgoResult.infeasible(solver_calls=len(subsets))
    return AlgoResult(
        active_set=best_set,
        z_final=Selection.from_active(cfg.L, best_set),
        v_final=best.v,
        power_w=best.power,
        status=AlgoStatus.CONVERGED,
        solver_calls=len(subsets),
    )


@dataclass(order=True)
class BnBNode:
    lower_bound: float
    seq: int
    fixed_on: frozenset = field(compare=False, default=frozenset())
    fixed_off: frozenset = field(compare=False, default=frozenset())
    depth: int = field(compare=False, default=0)
    z: np.ndarray | None = field(compare=False, default=None)


@dataclass(frozen=True)
class BnBSettings:
    node_limit: int = 10_000
    integrality_tol: float = 1e-7
    prune_tol: float = 1e-9


def _relax(cfg, ch, on, off, settings):
    p = conic.build_relaxed(cfg, ch, on, off)
    r = conic.solve(p, settings)
    if r.status is SolveStatus.INFEASIBLE:
        return None
    if not r.ok:
        raise SolverError(r, p.label)
    return r.objective_value, conic.decode_selection(cfg, p, r.x)


def branch_and_bound(
    cfg: SystemConfig,
    ch: Channel,
    settings: BnBSettings | None = None,
    solver: SolverSettings | None = None,
) -> AlgoResult:
    settings = settings or BnBSettings()
    calls = 0
    root = _relax(cfg, ch, (), (), solver)
    calls += 1
    if root is None:
        return AlgoResult.infeasible(solver_calls=calls, info={"nodes": 0, "bounds": []})

    counter = itertools.count()
    heap = [BnBNode(root[0], next(counter), frozenset(), frozenset(), 0, root[1])]
    incumbent, incumbent_set = None, None
    tried: set[tuple[int, ...]] = set()
    bounds: list[float] = []
    expanded = 0
    status = AlgoStatus.CONVERGED

    while heap:
        node = heapq.heappop(heap)
        if incumbent is not None and node.lower_bound >= incumbent.power - settings.prune_tol:
            continue
        if expanded >= settings.node_limit:
            status = AlgoStatus.NODE_LIMIT
            break
        expanded += 1
        bounds.append(node.lower_bound)
        z = node.z
        # Every RRH with positive relaxed z, plus the pinned ones, supports a feasible point.
        support = tuple(sorted(set(np.flatnonzero(z > settings.integrality_tol)) | node.fixed_on))
        if support not in tried:
            tried.add(support)
            sol = solve_support(cfg, ch, support, solver)
            calls += 1
            if sol is not None and (incumbent is None or sol.power < incumbent.power - 1e-12):
                incumbent, incumbent_set = sol, support

        free = [l for l in range(cfg.L) if l not in node.fixed_on and l not in node.fixed_off]
        frac = [(min(z[l], 1 - z[l]), l) for l in free if settings.integrality_tol < z[l] < 1 - settings.integrality_tol]
        if not frac:
            continue
        l = max(frac, key=lambda t: (t[0], -t[1]))[1]
        for on, off in ((node.fixed_on, node.fixed_off | {l}), (node.fixed_on | {l}, node.fixed_off)):
            child = _relax(cfg, ch, on, off, solver)
            calls += 1
            if child is None:
                continue
            if incumbent is not None and child[0] >= incumbent.power - settings.prune_tol:
                continue
            heapq.heappush(heap, BnBNode(child[0], next(counter), frozenset(on), frozenset(off), node.depth + 1, child[1]))

    info = {"nodes": expanded, "bounds": bounds}
    if incumbent is None:
        return AlgoResult.infeasible(solver_calls=calls, info=info)
    return AlgoResult(
        active_set=tuple(int(l) for l in incumbent_set),
        z_final=Selection.from_active(cfg.L, incumbent_set),
        v_final=incumbent.v,
        power_w=incumbent.power,
        status=status,
        solver_calls=calls,
        info=info,
    )


def run_rmip(cfg: SystemConfig, ch: Channel, settings: SolverSettings | None = None) -> AlgoResult:
    root = _relax(cfg, ch, (), (), settings)
    if root is None:
        return AlgoResult.infeasible(solver_calls=1)
    z = root[1]
    res = bisection_selection(cfg, ch, Ordering.from_keys(list(z), z), settings)
    res.solver_calls += 1
    res.info["z_relaxed"] = z
    return res
