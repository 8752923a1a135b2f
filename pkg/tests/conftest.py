from dataclasses import replace

import numpy as np
import pytest

from safeisac.scenario import ScenarioConfig, generate_channels


def make(seed=0, **kw):
    cfg = replace(ScenarioConfig(), seed=seed, **kw)
    return cfg, generate_channels(cfg)


def unit_phases(rng, n):
    return np.exp(2j * np.pi * rng.uniform(size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
