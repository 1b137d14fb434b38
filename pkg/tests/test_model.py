import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from greenran.model import (
    Beamformer, Channel, Selection, SystemConfig, check_feasibility, db_to_linear, generate_channel,
    generate_topology, make_instance, network_power, phase_normalize, sinr, sphere_residual,
)

from conftest import random_beamformer, small_instance


def test_config_broadcasts_and_validates():
    cfg = SystemConfig(L=3, K=2, N_l=[1, 2, 3])
    assert cfg.P_fronthaul_l == (13.0, 13.0, 13.0)
    assert list(cfg.offsets) == [0, 1, 3, 6]
    with pytest.raises(ValueError):
        SystemConfig(eta_l=1.5)
    with pytest.raises(ValueError):
        SystemConfig(L=2, N_l=[1, 2, 3])
    with pytest.raises(ValueError):
        SystemConfig(noise_power_k=0.0)
    assert SystemConfig(K=2).with_sinr_db(10).gamma_k == pytest.approx((10.0, 10.0))
    assert db_to_linear(0) == 1.0


def test_topology_in_region_and_deterministic():
    cfg = SystemConfig(L=10, K=6, region_halfwidth_m=1000)
    t1, t2 = generate_topology(cfg, 7), generate_topology(cfg, 7)
    pts = np.vstack([t1.rrh_positions, t1.user_positions])
    assert pts.shape == (16, 2)
    assert np.all(np.abs(pts) <= 1000)
    assert np.array_equal(t1.rrh_positions, t2.rrh_positions)
    assert np.array_equal(t1.user_positions, t2.user_positions)
    assert not np.array_equal(t1.user_positions, generate_topology(cfg, 8).user_positions)


def test_degenerate_region_puts_points_at_origin():
    topo = generate_topology(SystemConfig(L=1, K=1, region_halfwidth_m=0.0), 3)
    assert np.all(topo.rrh_positions == 0) and np.all(topo.user_positions == 0)


def test_channel_shape_and_determinism():
    cfg = SystemConfig(L=10, K=6, N_l=2)
    topo = generate_topology(cfg, 1)
    a, b = generate_channel(cfg, topo, 1), generate_channel(cfg, topo, 1)
    assert a.h.shape == (6, 20)
    assert all(a.block(k, l).shape == (2,) for k in range(6) for l in range(10))
    assert np.array_equal(a.h, b.h) and a.digest() == b.digest()
    assert np.all(np.isfinite(a.h))


def test_unit_gain_at_reference_distance():
    # All points at the origin: distance clamps to d_ref, so E|h|^2 = N_l.
    cfg = SystemConfig(L=1, K=1, N_l=4, region_halfwidth_m=0.0)
    power = np.mean([np.sum(np.abs(make_instance(cfg, s).h) ** 2) for s in range(4000)])
    assert power == pytest.approx(4.0, rel=0.03)


def _bf(cfg, norms):
    """Beamformer whose stacked block on RRH l has squared norm norms[l]."""
    v = Beamformer.zeros(cfg)
    for l, sq in enumerate(norms):
        v.v[0, v.offsets[l]] = np.sqrt(sq)
    return v


def test_network_power_examples():
    cfg = SystemConfig(L=2, K=1, N_l=1)
    assert network_power(cfg, np.zeros(2), Beamformer.zeros(cfg)) == 0.0
    assert network_power(cfg, np.array([1.0, 0.0]), _bf(cfg, [2.0, 0.0])) == pytest.approx(21.0)
    cfg10 = SystemConfig(L=10, K=1, N_l=1)
    assert network_power(cfg10, np.ones(10), _bf(cfg10, [1.0] * 10)) == pytest.approx(170.0)


@given(t=st.floats(-10, 10), seed=st.integers(0, 2**32 - 1))
def test_transmit_part_is_quadratic(t, seed):
    cfg = SystemConfig(L=3, K=2, N_l=2)
    rng = np.random.default_rng(seed)
    v = random_beamformer(cfg, rng)
    z = rng.uniform(size=3)
    base = network_power(cfg, z, Beamformer.zeros(cfg))
    lhs = network_power(cfg, z, Beamformer(t * v.v, v.offsets)) - base
    assert lhs == pytest.approx(t * t * (network_power(cfg, z, v) - base), rel=1e-9, abs=1e-12)


def test_sinr_examples():
    cfg = SystemConfig(L=1, K=1, N_l=2, noise_power_k=1.0)
    ch = Channel(np.array([[1.0, 0.0]], dtype=complex), cfg.offsets)
    assert sinr(cfg, ch, Beamformer(np.array([[2.0, 0.0]], dtype=complex), cfg.offsets), 0) == pytest.approx(4.0)
    assert sinr(cfg, ch, Beamformer.zeros(cfg), 0) == 0.0
    # h_1^H v_1 = 1, h_1^H v_2 = 0.5, sigma_1^2 = 0.75
    cfg2 = SystemConfig(L=1, K=2, N_l=1, noise_power_k=[0.75, 1.0])
    ch2 = Channel(np.array([[1.0], [1.0]], dtype=complex), cfg2.offsets)
    v2 = Beamformer(np.array([[1.0], [0.5]], dtype=complex), cfg2.offsets)
    assert sinr(cfg2, ch2, v2, 0) == pytest.approx(1.0)


@given(seed=st.integers(0, 2**32 - 1), phases=arrays(float, 3, elements=st.floats(-np.pi, np.pi)))
def test_sinr_phase_invariant(seed, phases):
    cfg = SystemConfig(L=3, K=3, N_l=2)
    ch = make_instance(cfg, seed % 1000)
    v = random_beamformer(cfg, np.random.default_rng(seed))
    rotated = Beamformer(v.v * np.exp(1j * phases)[:, None], v.offsets)
    for k in range(3):
        assert sinr(cfg, ch, rotated, k) == pytest.approx(sinr(cfg, ch, v, k), rel=1e-12, abs=1e-300)


def test_feasibility_examples():
    cfg = SystemConfig(L=2, K=2, N_l=1, gamma_k=1.0)
    ch = Channel(np.ones((2, 2), dtype=complex), cfg.offsets)
    rep = check_feasibility(cfg, ch, Beamformer.zeros(cfg), np.zeros(2), 0.0)
    assert not any(rep.sinr_ok) and all(rep.power_ok) and not rep.feasible
    v = Beamformer.zeros(cfg)
    v.v[0, 1] = 0.1
    rep = check_feasibility(cfg, ch, v, np.array([1.0, 0.0]), 1e-9)
    assert rep.power_ok == [True, False]


def test_phase_normalize_examples():
    cfg = SystemConfig(L=1, K=1, N_l=1)
    ch = Channel(np.array([[1.0 + 0j]]), cfg.offsets)
    v = Beamformer(np.array([[2.0 + 0j]]), cfg.offsets)
    assert np.array_equal(phase_normalize(ch, v).v, v.v)
    vi = Beamformer(np.array([[1j]]), cfg.offsets)
    out = phase_normalize(ch, vi)
    assert (ch.h.conj() @ out.v.T)[0, 0] == pytest.approx(1.0 + 0j, abs=1e-15)


@given(seed=st.integers(0, 10**6))
def test_phase_normalize_properties(seed):
    cfg, ch = small_instance(seed % 50, L=3, K=3, sinr_db=seed % 7)
    rng = np.random.default_rng(seed)
    v = random_beamformer(cfg, rng, scale=rng.uniform(0.01, 1.0))
    w = phase_normalize(ch, v)
    assert np.array_equal(v.group_norms(), w.group_norms()) or np.allclose(v.group_norms(), w.group_norms(), rtol=1e-15)
    diag = np.einsum("kn,kn->k", ch.h.conj(), w.v)
    assert np.all(np.abs(diag.imag) <= 1e-12 * np.abs(diag) + 1e-300) and np.all(diag.real >= 0)
    rep = check_feasibility(cfg, ch, w, np.ones(cfg.L), 0.0)
    for k in range(cfg.K):
        before, after = sinr(cfg, ch, v, k), sinr(cfg, ch, w, k)
        assert after == pytest.approx(before, rel=1e-12)
        margin = after - cfg.gamma_k[k]
        if abs(margin) > 1e-9 * max(1.0, cfg.gamma_k[k]):
            assert rep.sinr_ok[k] == (margin > 0)


def test_sphere_residual_examples():
    assert sphere_residual(np.array([1.0, 0.0, 1.0])) == 0.0
    assert sphere_residual(np.full(7, 0.5)) == pytest.approx(7 / 4)
    assert sphere_residual(np.array([0.5, 1.0])) == pytest.approx(0.25)


@given(z=arrays(float, st.integers(1, 12), elements=st.floats(0, 1)))
def test_sphere_residual_range(z):
    r = sphere_residual(z)
    assert -1e-12 <= r <= len(z) / 4 + 1e-12
    binary = np.all((z == 0) | (z == 1))
    assert (abs(r) <= 1e-12) == binary or (not binary and np.min(np.minimum(z, 1 - z)) < 1e-6)


def test_sphere_residual_zero_on_all_binary_points():
    for bits in itertools.product([0.0, 1.0], repeat=6):
        assert sphere_residual(np.array(bits)) == 0.0


def test_selection_modes():
    with pytest.raises(ValueError):
        Selection(np.array([0.5]), "binary")
    with pytest.raises(ValueError):
        Selection(np.array([1.2]))
    s = Selection.from_active(4, (1, 3))
    assert s.active_set() == (1, 3) and s.mode == "binary"
    assert Selection.relaxed([1 + 1e-12, -1e-12]).z.tolist() == [1.0, 0.0]
