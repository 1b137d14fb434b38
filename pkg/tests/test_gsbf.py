import numpy as np
import pytest

from greenran import conic
from greenran.gsbf import (
    Ordering, bisection_selection, default_weights, ordering, run_gsbf, solve_support, stage1_group_norm,
)
from greenran.mip import enumerate_optimal
from greenran.model import Beamformer, Channel, SystemConfig, check_feasibility
from greenran.result import AlgoStatus

from conftest import small_instance, toy_channel, toy_config


def _with_norms(cfg, norms):
    v = Beamformer.zeros(cfg)
    for l, n in enumerate(norms):
        v.v[0, v.offsets[l]] = n
    return v


def test_ordering_examples():
    cfg = SystemConfig(L=3, K=1, N_l=1)
    o = ordering(cfg, _with_norms(cfg, [0.0, 5.0, 1.0]))
    assert o.perm == (0, 2, 1)
    assert ordering(cfg, _with_norms(cfg, [1.0, 1.0, 1.0])).perm == (0, 1, 2)
    cfg2 = SystemConfig(L=2, K=1, N_l=1, P_fronthaul_l=[13.0, 1.0])
    o2 = ordering(cfg2, _with_norms(cfg2, [1.0, 1.0]))
    assert o2.theta[0] == pytest.approx(np.sqrt(0.25 / 13)) and o2.perm == (0, 1)


def test_ordering_validation_and_prefixes():
    with pytest.raises(ValueError):
        Ordering((0, 0, 1), (0.0, 0.0, 0.0))
    o = Ordering((2, 0, 1), (0.0, 0.0, 0.0))
    assert o.active(0) == () and o.active(1) == (1,) and o.active(2) == (0, 1) and o.active(3) == (0, 1, 2)


def test_stage1_examples():
    cfg = SystemConfig(L=2, K=1, N_l=1, noise_power_k=1.0, P_max_l=4.0)
    ch = Channel(np.array([[1.0 + 0j, 0.0]]), cfg.offsets)
    v = stage1_group_norm(cfg, ch, [1.0, 1.0])
    assert np.linalg.norm(v.stacked(1)) <= 1e-7
    cfg0 = SystemConfig(L=2, K=1, N_l=1, gamma_k=0.0)
    assert np.allclose(stage1_group_norm(cfg0, ch, [1.0, 1.0]).v, 0, atol=1e-7)
    toy = toy_config()
    v1 = stage1_group_norm(toy, toy_channel(toy), [3.0])
    assert np.linalg.norm(v1.v) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_stage1_weight_scaling_invariance(seed):
    cfg, ch = small_instance(seed)
    if not conic.solve(conic.build_fixed_support(cfg, ch, range(cfg.L))).ok:
        pytest.skip("instance infeasible")
    a = stage1_group_norm(cfg, ch, np.ones(cfg.L))
    b = stage1_group_norm(cfg, ch, 7.0 * np.ones(cfg.L))
    assert np.allclose(a.group_norms(), b.group_norms(), atol=1e-5)


def test_bisection_zero_targets():
    cfg = SystemConfig(L=4, K=2, N_l=2, gamma_k=0.0)
    _, ch = small_instance(0, L=4, K=2)
    res = bisection_selection(cfg, ch, Ordering((0, 1, 2, 3), (0,) * 4))
    assert res.active_set == () and res.power_w == 0.0 and res.info["j_star"] == 0


def test_bisection_when_all_rrhs_needed():
    # Two users, two single-antenna RRHs, orthogonal channels: both RRHs are required.
    cfg = SystemConfig(L=2, K=2, N_l=1, noise_power_k=1.0, gamma_k=1.0)
    ch = Channel(np.eye(2, dtype=complex), cfg.offsets)
    res = bisection_selection(cfg, ch, Ordering((0, 1), (0.0, 0.0)))
    assert res.info["j_star"] == 2 and res.active_set == (0, 1)
    assert res.info["bisection_calls"] <= int(np.ceil(np.log2(cfg.L + 1))) + 1


def _prefix_oracle(cfg, ch, order):
    best = None
    for J in range(cfg.L + 1):
        sol = solve_support(cfg, ch, order.active(J))
        if sol is not None and (best is None or sol.power < best[1] - 1e-9):
            best = (J, sol.power)
    return best


@pytest.mark.parametrize("seed", range(5))
def test_bisection_matches_exhaustive_prefix_scan(seed):
    cfg, ch = small_instance(seed, L=4, K=2, sinr_db=4.0)
    order = Ordering(tuple(np.random.default_rng(seed).permutation(cfg.L)), (0.0,) * cfg.L)
    res = bisection_selection(cfg, ch, order)
    oracle = _prefix_oracle(cfg, ch, order)
    if oracle is None:
        assert res.status is AlgoStatus.INFEASIBLE
    else:
        assert res.info["best_J"] == oracle[0] and res.power_w == pytest.approx(oracle[1], abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_prefix_feasibility_monotone(seed):
    cfg, ch = small_instance(seed, L=6, K=3)
    o = Ordering(tuple(range(cfg.L)), (0.0,) * cfg.L)
    feas = [solve_support(cfg, ch, o.active(J)) is not None for J in range(cfg.L + 1)]
    assert all(b or not a for a, b in zip(feas, feas[1:]))


def test_run_gsbf_examples():
    cfg = SystemConfig(L=3, K=2, N_l=2, gamma_k=0.0)
    _, ch = small_instance(0, L=3, K=2)
    res = run_gsbf(cfg, ch)
    assert res.active_set == () and res.power_w == 0.0
    toy = toy_config()
    r = run_gsbf(toy, toy_channel(toy))
    assert r.active_set == (0,) and r.power_w == pytest.approx(17.0, abs=1e-6)
    assert default_weights(toy)[0] == pytest.approx(np.sqrt(52.0))


@pytest.mark.parametrize("seed", range(5))
def test_gsbf_bounded_by_enumeration(seed):
    cfg, ch = small_instance(seed, sinr_db=0.0)
    g, e = run_gsbf(cfg, ch), enumerate_optimal(cfg, ch)
    assert g.feasible == e.feasible
    if g.feasible:
        assert g.power_w >= e.power_w - 1e-6
        assert check_feasibility(cfg, ch, g.v_final, g.z_final, 1e-6).feasible
