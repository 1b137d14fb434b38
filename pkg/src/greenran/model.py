"""Network model: configuration, topology, channels, and exact evaluation of
SINR, network power, feasibility and the l2-box sphere residual.

Beamformers and channels are stored user-major as complex arrays of shape
``(K, sum(N_l))``; the antennas of RRH ``l`` occupy the contiguous column
block ``offsets[l]:offsets[l+1]``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

RELAXED = "relaxed"
BINARY = "binary"


def _as_tuple(value, n: int, name: str, cast=float) -> tuple:
    if np.isscalar(value):
        return tuple(cast(value) for _ in range(n))
    out = tuple(cast(x) for x in value)
    if len(out) != n:
        raise ValueError(f"{name}: expected {n} entries, got {len(out)}")
    return out


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


@dataclass(frozen=True)
class SystemConfig:
    """Physical constants of one Cloud-RAN instance.

    Per-RRH and per-user quantities may be passed as scalars; they are
    broadcast to tuples of length ``L`` / ``K``.
    """

    L: int = 10
    K: int = 6
    N_l: Sequence[int] = 2
    P_max_l: Sequence[float] = 1.0
    P_fronthaul_l: Sequence[float] = 13.0
    eta_l: Sequence[float] = 0.25
    noise_power_k: Sequence[float] = 1e-4
    gamma_k: Sequence[float] = 1.0
    region_halfwidth_m: float = 1000.0
    pathloss_exponent: float = 3.7
    pathloss_ref_m: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if int(self.L) < 1 or int(self.K) < 1:
            raise ValueError("L and K must be >= 1")
        L, K = int(self.L), int(self.K)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "N_l", _as_tuple(self.N_l, L, "N_l", int))
        for name in ("P_max_l", "P_fronthaul_l", "eta_l"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), L, name))
        for name in ("noise_power_k", "gamma_k"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), K, name))
        if min(self.N_l) < 1:
            raise ValueError("every RRH needs at least one antenna")
        if min(self.P_max_l) <= 0 or min(self.P_fronthaul_l) <= 0:
            raise ValueError("powers must be positive")
        if not all(0.0 < e <= 1.0 for e in self.eta_l):
            raise ValueError("eta_l must lie in (0, 1]")
        if min(self.gamma_k) < 0:
            raise ValueError("gamma_k must be nonnegative")
        if min(self.noise_power_k) <= 0:
            raise ValueError("noise_power_k must be positive")
        if self.region_halfwidth_m < 0 or self.pathloss_ref_m <= 0:
            raise ValueError("region_halfwidth_m >= 0 and pathloss_ref_m > 0 required")

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.N_l)]).astype(int)

    @property
    def n_antennas(self) -> int:
        return int(sum(self.N_l))

    def with_sinr_db(self, sinr_db: float | Sequence[float]) -> "SystemConfig":
        if np.isscalar(sinr_db):
            sinr_db = [sinr_db] * self.K
        return replace(self, gamma_k=tuple(db_to_linear(d) for d in sinr_db))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out


@dataclass(frozen=True)
class Topology:
    rrh_positions: np.ndarray  # (L, 2) meters
    user_positions: np.ndarray  # (K, 2) meters


@dataclass(frozen=True)
class Channel:
    h: np.ndarray  # (K, sum N_l) complex
    offsets: np.ndarray

    def block(self, k: int, l: int) -> np.ndarray:
        return self.h[k, self.offsets[l] : self.offsets[l + 1]]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.h).tobytes()).hexdigest()[:16]


@dataclass
class Beamformer:
    v: np.ndarray  # (K, sum N_l) complex, row k stacks v_1k..v_Lk
    offsets: np.ndarray

    @classmethod
    def zeros(cls, cfg: SystemConfig) -> "Beamformer":
        return cls(np.zeros((cfg.K, cfg.n_antennas), dtype=complex), cfg.offsets)

    def block(self, l: int, k: int) -> np.ndarray:
        return self.v[k, self.offsets[l] : self.offsets[l + 1]]

    def stacked(self, l: int) -> np.ndarray:
        """All users' beamformers on RRH ``l`` as one vector of length K*N_l."""
        return self.v[:, self.offsets[l] : self.offsets[l + 1]].reshape(-1)

    def group_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(self.stacked(l)) for l in range(len(self.offsets) - 1)])

    def copy(self) -> "Beamformer":
        return Beamformer(self.v.copy(), self.offsets)


@dataclass
class Selection:
    z: np.ndarray
    mode: str = RELAXED

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.mode == BINARY:
            if not np.all((self.z == 0.0) | (self.z == 1.0)):
                raise ValueError("binary selection must be exactly 0/1")
        elif self.mode == RELAXED:
            if np.any(self.z < 0.0) or np.any(self.z > 1.0):
                raise ValueError("relaxed selection must lie in [0, 1]")
        else:
            raise ValueError(f"unknown selection mode {self.mode!r}")

    @classmethod
    def relaxed(cls, z) -> "Selection":
        """Clip tiny solver overshoot back into the box."""
        return cls(np.clip(np.asarray(z, dtype=float), 0.0, 1.0), RELAXED)

    @classmethod
    def from_active(cls, L: int, active) -> "Selection":
        z = np.zeros(L)
        z[list(active)] = 1.0
        return cls(z, BINARY)

    def active_set(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.z > 0.5))


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), stream])


def generate_topology(cfg: SystemConfig, seed: int) -> Topology:
    rng = _rng(seed, 0)
    a = cfg.region_halfwidth_m
    pts = rng.uniform(-a, a, size=(cfg.L + cfg.K, 2)) if a > 0 else np.zeros((cfg.L + cfg.K, 2))
    return Topology(rrh_positions=pts[: cfg.L], user_positions=pts[cfg.L :])


def large_scale_gain(cfg: SystemConfig, topo: Topology) -> np.ndarray:
    """(K, L) power gains from the clamped power-law path loss."""
    d = np.linalg.norm(topo.user_positions[:, None, :] - topo.rrh_positions[None, :, :], axis=-1)
    return (np.maximum(d, cfg.pathloss_ref_m) / cfg.pathloss_ref_m) ** (-cfg.pathloss_exponent)


def generate_channel(cfg: SystemConfig, topo: Topology, seed: int) -> Channel:
    if topo.rrh_positions.shape != (cfg.L, 2) or topo.user_positions.shape != (cfg.K, 2):
        raise ValueError("topology does not match configuration")
    rng = _rng(seed, 1)
    n = cfg.n_antennas
    w = (rng.standard_normal((cfg.K, n)) + 1j * rng.standard_normal((cfg.K, n))) / np.sqrt(2.0)
    gain = large_scale_gain(cfg, topo)
    per_antenna = np.repeat(np.sqrt(gain), cfg.N_l, axis=1)
    return Channel(h=per_antenna * w, offsets=cfg.offsets)


def make_instance(cfg: SystemConfig, seed: int) -> Channel:
    return generate_channel(cfg, generate_topology(cfg, seed), seed)


def _z_of(z) -> np.ndarray:
    return np.asarray(z.z if isinstance(z, Selection) else z, dtype=float)


def transmit_power(cfg: SystemConfig, v: Beamformer) -> float:
    sq = np.array([np.vdot(v.stacked(l), v.stacked(l)).real for l in range(cfg.L)])
    return float(np.sum(sq / np.asarray(cfg.eta_l)))


def network_power(cfg: SystemConfig, z, v: Beamformer) -> float:
    return float(np.dot(cfg.P_fronthaul_l, _z_of(z))) + transmit_power(cfg, v)


def gram(ch: Channel, v: Beamformer) -> np.ndarray:
    """G[k, i] = h_k^H v_i."""
    return ch.h.conj() @ v.v.T


def sinr(cfg: SystemConfig, ch: Channel, v: Beamformer, k: int) -> float:
    g = np.abs(gram(ch, v)[k]) ** 2
    interference = g.sum() - g[k]
    return float(g[k] / (interference + cfg.noise_power_k[k]))


@dataclass
class FeasibilityReport:
    sinr_ok: list[bool]
    power_ok: list[bool]
    sinr_slack: list[float] = field(default_factory=list)
    power_slack: list[float] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(self.sinr_ok) and all(self.power_ok)


def check_feasibility(cfg: SystemConfig, ch: Channel, v: Beamformer, z, tol: float) -> FeasibilityReport:
    """SOC form of the SINR constraints plus the z-coupled per-RRH power limits.

    The SINR cone is ``sqrt(gamma_k) * ||(h_k^H v_i)_{i!=k}, sigma_k|| <= Re(h_k^H v_k)``,
    which after phase normalization is equivalent to ``SINR_k >= gamma_k``.
    """
    zz = _z_of(z)
    G = gram(ch, v)
    sinr_ok, sinr_slack = [], []
    for k in range(cfg.K):
        interf = np.sum(np.abs(G[k]) ** 2) - abs(G[k, k]) ** 2
        lhs = np.sqrt(cfg.gamma_k[k]) * np.sqrt(max(interf, 0.0) + cfg.noise_power_k[k])
        slack = G[k, k].real - lhs
        sinr_slack.append(float(slack))
        sinr_ok.append(bool(slack >= -tol))
    power_ok, power_slack = [], []
    for l in range(cfg.L):
        slack = zz[l] * np.sqrt(cfg.P_max_l[l]) - np.linalg.norm(v.stacked(l))
        power_slack.append(float(slack))
        power_ok.append(bool(slack >= -tol))
    return FeasibilityReport(sinr_ok, power_ok, sinr_slack, power_slack)


def phase_normalize(ch: Channel, v: Beamformer) -> Beamformer:
    """Rotate each user's beamformer so that h_k^H v_k is real and >= 0."""
    diag = np.einsum("kn,kn->k", ch.h.conj(), v.v)
    mag = np.abs(diag)
    rot = np.where(mag > 0, np.conj(diag) / np.where(mag > 0, mag, 1.0), 1.0)
    return Beamformer(v.v * rot[:, None], v.offsets)


def sphere_residual(z) -> float:
    zz = _z_of(z)
    return float(len(zz) / 4.0 - np.sum((zz - 0.5) ** 2))
