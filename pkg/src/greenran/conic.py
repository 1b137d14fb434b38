"""Second-order-cone programs for every algorithm in the package.

A :class:`ConeProgram` minimizes ``c @ x + c0`` subject to an ordered list of
blocks, each requiring ``A @ x + b`` to lie in a cone (zero, nonnegative
orthant, or second-order cone with the first row as the scalar bound).
Complex beamformers enter through their real embedding: the span of
``v[l,k]`` holds ``N_l`` real parts followed by ``N_l`` imaginary parts.

The squared norm ``||v_l||^2 <= t_l`` is written as the second-order cone
``(t_l + 1, t_l - 1, 2 v_l)``.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import clarabel
import numpy as np
import scipy.sparse as sp

from .model import Beamformer, Channel, SystemConfig

ZERO = "zero"
NONNEG = "nonnegative"
SOC = "second-order-cone"
_KINDS = (ZERO, NONNEG, SOC)


@dataclass
class AffineRow:
    """One real affine expression ``val @ x[idx] + const``."""

    idx: np.ndarray
    val: np.ndarray
    const: float = 0.0

    @classmethod
    def constant(cls, c: float) -> "AffineRow":
        return cls(np.zeros(0, dtype=int), np.zeros(0), float(c))

    @classmethod
    def var(cls, j: int, coef: float = 1.0, const: float = 0.0) -> "AffineRow":
        return cls(np.array([j]), np.array([float(coef)]), float(const))

    def __add__(self, other: "AffineRow") -> "AffineRow":
        return AffineRow(
            np.concatenate([self.idx, other.idx]),
            np.concatenate([self.val, other.val]),
            self.const + other.const,
        )

    def scaled(self, a: float) -> "AffineRow":
        return AffineRow(self.idx, self.val * a, self.const * a)

    def value(self, x: np.ndarray) -> float:
        return float(self.val @ x[self.idx] + self.const)


@dataclass
class Block:
    kind: str
    rows: list[AffineRow]

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if not self.rows:
            raise ValueError("cone block needs at least one row")

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.array([r.value(x) for r in self.rows])

    def violation(self, x: np.ndarray) -> float:
        y = self.values(x)
        if self.kind == ZERO:
            return float(np.max(np.abs(y)))
        if self.kind == NONNEG:
            return float(max(0.0, -np.min(y)))
        return float(max(0.0, np.linalg.norm(y[1:]) - y[0]))


@dataclass
class ConeProgram:
    n: int
    c: np.ndarray
    c0: float
    blocks: list[Block]
    var_map: dict[str, tuple[int, int]]
    label: str = ""

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.c0) if self.n else float(self.c0)

    def count(self, kind: str, prefix: str | None = None) -> int:
        return sum(1 for b, tag in zip(self.blocks, self.tags) if b.kind == kind and (prefix is None or tag.startswith(prefix)))

    tags: list[str] = field(default_factory=list)

    def matrices(self) -> tuple[sp.csc_matrix, np.ndarray, list]:
        """Stack the blocks as ``A x + b`` with the matching cone list."""
        rows, cols, vals, b, cones = [], [], [], [], []
        r = 0
        for blk in self.blocks:
            for row in blk.rows:
                rows.append(np.full(len(row.idx), r))
                cols.append(row.idx)
                vals.append(row.val)
                b.append(row.const)
                r += 1
            m = len(blk.rows)
            if blk.kind == ZERO:
                cones.append(clarabel.ZeroConeT(m))
            elif blk.kind == NONNEG:
                cones.append(clarabel.NonnegativeConeT(m))
            else:
                cones.append(clarabel.SecondOrderConeT(m))
        A = sp.csc_matrix(
            (np.concatenate(vals) if vals else [], (np.concatenate(rows) if rows else [], np.concatenate(cols) if cols else [])),
            shape=(r, self.n),
        )
        A.sum_duplicates()
        return A, np.asarray(b, dtype=float), cones

    def max_violation(self, x: np.ndarray) -> float:
        return max((b.violation(x) for b in self.blocks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "format": "greenran-cone-program",
            "version": 1,
            "label": self.label,
            "n": self.n,
            "objective": {"c": self.c.tolist(), "c0": self.c0},
            "blocks": [
                {
                    "kind": b.kind,
                    "tag": tag,
                    "rows": [{"idx": r.idx.tolist(), "val": r.val.tolist(), "const": r.const} for r in b.rows],
                }
                for b, tag in zip(self.blocks, self.tags)
            ],
            "var_map": {k: list(v) for k, v in self.var_map.items()},
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_ERROR = "NumericalError"


@dataclass
class SolverSettings:
    feasibility_tol: float = 1e-8
    max_iterations: int = 200
    verbose: bool = False

    def __post_init__(self):
        if self.feasibility_tol <= 0:
            raise ValueError("feasibility_tol must be positive")


@dataclass
class SolveResult:
    status: SolveStatus
    x: np.ndarray
    objective_value: float
    max_primal_residual: float
    solve_time_ms: float

    @property
    def ok(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class SolverError(RuntimeError):
    def __init__(self, result: SolveResult, label: str = ""):
        super().__init__(f"conic solve {label!r} ended with {result.status.value}")
        self.result = result


# ---------------------------------------------------------------- building


class _Builder:
    def __init__(self, label: str):
        self.n = 0
        self.var_map: dict[str, tuple[int, int]] = {}
        self.blocks: list[Block] = []
        self.tags: list[str] = []
        self.cost: dict[int, float] = {}
        self.c0 = 0.0
        self.label = label

    def add_var(self, name: str, size: int) -> tuple[int, int]:
        span = (self.n, self.n + size)
        self.var_map[name] = span
        self.n += size
        return span

    def add_block(self, kind: str, rows: list[AffineRow], tag: str) -> None:
        self.blocks.append(Block(kind, rows))
        self.tags.append(tag)

    def add_cost(self, j: int, coef: float) -> None:
        self.cost[j] = self.cost.get(j, 0.0) + coef

    def build(self) -> ConeProgram:
        c = np.zeros(self.n)
        for j, a in self.cost.items():
            c[j] += a
        return ConeProgram(self.n, c, self.c0, self.blocks, self.var_map, self.label, self.tags)


def complex_soc_rows(h: np.ndarray, v_span: tuple[int, int]) -> tuple[AffineRow, AffineRow]:
    """Rows giving Re(h^H v) and Im(h^H v) for ``v`` stored as [Re v, Im v]."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    n = len(h)
    start, stop = v_span
    if stop - start != 2 * n:
        raise ValueError(f"span of length {stop - start} does not fit a complex vector of length {n}")
    idx = np.arange(start, stop)
    # conj(c + i d) (a + i b) = (c a + d b) + i (c b - d a)
    re = AffineRow(idx, np.concatenate([h.real, h.imag]))
    im = AffineRow(idx, np.concatenate([-h.imag, h.real]))
    return re, im


def _v_name(l: int, k: int) -> str:
    return f"v[{l},{k}]"


def _add_beamformers(b: _Builder, cfg: SystemConfig, support: Sequence[int]) -> None:
    for l in support:
        for k in range(cfg.K):
            b.add_var(_v_name(l, k), 2 * cfg.N_l[l])


def _stack_rows(b: _Builder, cfg: SystemConfig, l: int) -> list[AffineRow]:
    """One row per real coordinate of the stacked per-RRH beamformer."""
    rows = []
    for k in range(cfg.K):
        start, stop = b.var_map[_v_name(l, k)]
        rows.extend(AffineRow.var(j) for j in range(start, stop))
    return rows


def _add_sinr_blocks(b: _Builder, cfg: SystemConfig, ch: Channel, support: Sequence[int]) -> None:
    for k in range(cfg.K):
        sg = np.sqrt(cfg.gamma_k[k])
        sigma = np.sqrt(cfg.noise_power_k[k])
        signal = AffineRow.constant(0.0)
        interference: list[AffineRow] = []
        for i in range(cfg.K):
            re_i, im_i = AffineRow.constant(0.0), AffineRow.constant(0.0)
            for l in support:
                re, im = complex_soc_rows(ch.block(k, l), b.var_map[_v_name(l, i)])
                re_i, im_i = re_i + re, im_i + im
            if i == k:
                signal = re_i
            else:
                interference += [re_i.scaled(sg), im_i.scaled(sg)]
        b.add_block(SOC, [signal, *interference, AffineRow.constant(sg * sigma)], f"sinr[{k}]")


def _add_epigraphs(b: _Builder, cfg: SystemConfig, support: Sequence[int]) -> None:
    for l in support:
        (j, _) = b.add_var(f"t[{l}]", 1)
        rows = [AffineRow.var(j, 1.0, 1.0), AffineRow.var(j, 1.0, -1.0)]
        rows += [r.scaled(2.0) for r in _stack_rows(b, cfg, l)]
        b.add_block(SOC, rows, f"epigraph[{l}]")
        b.add_cost(j, 1.0 / cfg.eta_l[l])


def _add_selection(b: _Builder, cfg: SystemConfig, fixed_on: Iterable[int], fixed_off: Iterable[int]) -> None:
    fixed_on, fixed_off = set(fixed_on), set(fixed_off)
    if fixed_on & fixed_off:
        raise ValueError("an RRH cannot be pinned both on and off")
    for l in range(cfg.L):
        (j, _) = b.add_var(f"z[{l}]", 1)
        b.add_block(NONNEG, [AffineRow.var(j), AffineRow.var(j, -1.0, 1.0)], f"box[{l}]")
        if l in fixed_on:
            b.add_block(ZERO, [AffineRow.var(j, 1.0, -1.0)], f"pin[{l}]")
        elif l in fixed_off:
            b.add_block(ZERO, [AffineRow.var(j)], f"pin[{l}]")
        b.add_block(SOC, [AffineRow.var(j, np.sqrt(cfg.P_max_l[l])), *_stack_rows(b, cfg, l)], f"power[{l}]")
        b.add_cost(j, cfg.P_fronthaul_l[l])


def _add_power_caps(b: _Builder, cfg: SystemConfig, support: Sequence[int]) -> None:
    for l in support:
        b.add_block(SOC, [AffineRow.constant(np.sqrt(cfg.P_max_l[l])), *_stack_rows(b, cfg, l)], f"power[{l}]")


def build_fixed_support(cfg: SystemConfig, ch: Channel, active: Iterable[int]) -> ConeProgram:
    """Minimum network power with the active RRH set fixed; inactive beamformers are absent."""
    support = sorted(set(int(l) for l in active))
    if any(l < 0 or l >= cfg.L for l in support):
        raise ValueError(f"active set {support} out of range for L={cfg.L}")
    b = _Builder(f"fixed_support{tuple(support)}")
    _add_beamformers(b, cfg, support)
    _add_sinr_blocks(b, cfg, ch, support)
    _add_power_caps(b, cfg, support)
    _add_epigraphs(b, cfg, support)
    b.c0 = float(sum(cfg.P_fronthaul_l[l] for l in support))
    return b.build()


def build_relaxed(
    cfg: SystemConfig, ch: Channel, fixed_on: Iterable[int] = (), fixed_off: Iterable[int] = ()
) -> ConeProgram:
    """Box relaxation z in [0,1]^L, optionally with pinned coordinates."""
    b = _Builder("relaxed")
    support = range(cfg.L)
    _add_beamformers(b, cfg, support)
    _add_sinr_blocks(b, cfg, ch, support)
    _add_selection(b, cfg, fixed_on, fixed_off)
    _add_epigraphs(b, cfg, support)
    return b.build()


def build_surrogate(cfg: SystemConfig, ch: Channel, lam: float, z_anchor) -> ConeProgram:
    """Relaxed program plus the tangent majorizer of lam * (L/4 - ||z - 1/2||^2) at ``z_anchor``."""
    if lam < 0:
        raise ValueError("multiplier must be nonnegative")
    za = np.asarray(getattr(z_anchor, "z", z_anchor), dtype=float)
    if za.shape != (cfg.L,) or np.any(za < 0) or np.any(za > 1):
        raise ValueError("anchor must be a point of [0,1]^L")
    p = build_relaxed(cfg, ch)
    d = za - 0.5
    for l in range(cfg.L):
        p.c[p.var_map[f"z[{l}]"][0]] += -2.0 * lam * d[l]
    p.c0 += lam * (cfg.L / 4.0 - d @ d + 2.0 * d @ za)
    p.label = "surrogate"
    return p


def build_group_norm(cfg: SystemConfig, ch: Channel, weights: Sequence[float]) -> ConeProgram:
    """Weighted sum of per-RRH beamformer norms under SINR and power limits."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (cfg.L,) or np.any(w <= 0):
        raise ValueError("weights must be L positive numbers")
    b = _Builder("group_norm")
    support = range(cfg.L)
    _add_beamformers(b, cfg, support)
    _add_sinr_blocks(b, cfg, ch, support)
    _add_power_caps(b, cfg, support)
    for l in support:
        (j, _) = b.add_var(f"s[{l}]", 1)
        b.add_block(SOC, [AffineRow.var(j), *_stack_rows(b, cfg, l)], f"group[{l}]")
        b.add_cost(j, w[l])
    return b.build()


# ---------------------------------------------------------------- decoding


def decode_beamformer(cfg: SystemConfig, p: ConeProgram, x: np.ndarray) -> Beamformer:
    bf = Beamformer.zeros(cfg)
    for l in range(cfg.L):
        for k in range(cfg.K):
            span = p.var_map.get(_v_name(l, k))
            if span is None:
                continue
            n = cfg.N_l[l]
            seg = x[span[0] : span[1]]
            bf.v[k, bf.offsets[l] : bf.offsets[l + 1]] = seg[:n] + 1j * seg[n:]
    return bf


def decode_selection(cfg: SystemConfig, p: ConeProgram, x: np.ndarray) -> np.ndarray:
    if "z[0]" not in p.var_map:
        raise KeyError("program has no selection variables")
    return np.array([x[p.var_map[f"z[{l}]"][0]] for l in range(cfg.L)])


def encode(cfg: SystemConfig, p: ConeProgram, z, v: Beamformer) -> np.ndarray:
    """Point of ``p`` for (z, v) with epigraph and norm auxiliaries set tight."""
    x = np.zeros(p.n)
    zz = np.asarray(getattr(z, "z", z), dtype=float) if z is not None else None
    for l in range(cfg.L):
        for k in range(cfg.K):
            span = p.var_map.get(_v_name(l, k))
            if span is not None:
                blk = v.block(l, k)
                x[span[0] : span[1]] = np.concatenate([blk.real, blk.imag])
        nrm = np.linalg.norm(v.stacked(l))
        for name, val in ((f"t[{l}]", nrm**2), (f"s[{l}]", nrm)):
            if name in p.var_map:
                x[p.var_map[name][0]] = val
        if f"z[{l}]" in p.var_map and zz is not None:
            x[p.var_map[f"z[{l}]"][0]] = zz[l]
    return x


# ---------------------------------------------------------------- solving

_CLARABEL_STATUS = {
    "Solved": SolveStatus.OPTIMAL,
    "AlmostSolved": SolveStatus.OPTIMAL,
    "PrimalInfeasible": SolveStatus.INFEASIBLE,
    "AlmostPrimalInfeasible": SolveStatus.INFEASIBLE,
    "MaxIterations": SolveStatus.ITERATION_LIMIT,
    "MaxTime": SolveStatus.ITERATION_LIMIT,
}


def _solve_constant(p: ConeProgram, tstart: float) -> SolveResult:
    x = np.zeros(0)
    viol = p.max_violation(x)
    status = SolveStatus.OPTIMAL if viol <= 0.0 else SolveStatus.INFEASIBLE
    return SolveResult(status, x, p.objective(x), viol, (time.perf_counter() - tstart) * 1e3)


def solve(p: ConeProgram, s: SolverSettings | None = None) -> SolveResult:
    """Solve with Clarabel (single-threaded interior point)."""
    s = s or SolverSettings()
    t0 = time.perf_counter()
    if p.n == 0:
        return _solve_constant(p, t0)
    A, b, cones = p.matrices()
    settings = clarabel.DefaultSettings()
    settings.verbose = s.verbose
    settings.max_iter = int(s.max_iterations)
    settings.tol_feas = s.feasibility_tol * 0.1
    settings.tol_gap_abs = 1e-9
    settings.tol_gap_rel = 1e-9
    settings.max_threads = 1
    P = sp.csc_matrix((p.n, p.n))
    try:
        sol = clarabel.DefaultSolver(P, p.c, (-A).tocsc(), b, cones, settings).solve()
    except BaseException as exc:  # pyo3 panics surface as BaseException subclasses
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        return SolveResult(SolveStatus.NUMERICAL_ERROR, np.full(p.n, np.nan), np.nan, np.inf, (time.perf_counter() - t0) * 1e3)
    status = _CLARABEL_STATUS.get(str(sol.status).split(".")[-1], SolveStatus.NUMERICAL_ERROR)
    x = np.asarray(sol.x, dtype=float)
    elapsed = (time.perf_counter() - t0) * 1e3
    if status is not SolveStatus.OPTIMAL:
        return SolveResult(status, x, np.nan, np.inf, elapsed)
    viol = p.max_violation(x)
    if viol > s.feasibility_tol:
        status = SolveStatus.NUMERICAL_ERROR
    return SolveResult(status, x, p.objective(x), viol, elapsed)
