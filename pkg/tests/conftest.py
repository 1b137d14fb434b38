import hypothesis
import numpy as np
import pytest

from greenran.model import Channel, SystemConfig, make_instance

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def toy_config(**kw):
    """One RRH, one antenna, one user: the closed-form instance."""
    base = dict(L=1, K=1, N_l=1, P_max_l=4.0, P_fronthaul_l=13.0, eta_l=0.25, noise_power_k=1.0, gamma_k=1.0)
    base.update(kw)
    return SystemConfig(**base)


def toy_channel(cfg, h=1.0):
    return Channel(h=np.full((1, 1), complex(h)), offsets=cfg.offsets)


@pytest.fixture
def toy():
    cfg = toy_config()
    return cfg, toy_channel(cfg)


def small_instance(seed, L=6, K=3, N=2, sinr_db=0.0, **kw):
    cfg = SystemConfig(L=L, K=K, N_l=N, **kw).with_sinr_db(sinr_db)
    return cfg, make_instance(cfg, seed)


def random_beamformer(cfg, rng, scale=0.3):
    from greenran.model import Beamformer

    v = scale * (rng.standard_normal((cfg.K, cfg.n_antennas)) + 1j * rng.standard_normal((cfg.K, cfg.n_antennas)))
    return Beamformer(v, cfg.offsets)


# Acceptance lines printed after the run, one per criterion.
ACCEPTANCE: dict[int, str] = {}
# (label, passed) for every feasible solution checked by the acceptance suite.
FEASIBILITY_LOG: list[tuple[str, bool]] = []


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number} ({name}): {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
