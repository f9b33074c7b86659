import copy

import numpy as np
import pytest

from ntn_isac import engine
from ntn_isac.config import SimConfig, preset

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_config(**engine_kw) -> SimConfig:
    cfg = SimConfig()
    sc = cfg.scenario
    sc.n_hotspot, sc.n_victim, sc.n_mobile = 6, 4, 10
    sc.n_uav, sc.n_tn, sc.n_slots = 4, 8, 8
    for k, v in engine_kw.items():
        setattr(cfg.engine, k, v)
    return cfg.validate()


@pytest.fixture
def small_cfg():
    return small_config()


@pytest.fixture(scope="session")
def preset_ntn():
    cfg = preset("paper-v1")
    cfg.engine.audit = True
    return engine.run(cfg)


@pytest.fixture(scope="session")
def preset_sweep():
    return engine.sweep_gamma(copy.deepcopy(preset("paper-v1")))
