import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fdra.channel import CellConfig, generate_scenario
from fdra.model import Scenario

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_scenario(m=2, n=2, k=2, seed=0, pb_dbm=20.0) -> Scenario:
    scenario, _ = generate_scenario(
        CellConfig(m_count=m, n_count=n, k_count=k, seed=seed, p_bs_dbm=pb_dbm)
    )
    return scenario


def unit_scenario(m=1, n=1, k=1, **overrides) -> Scenario:
    """Scenario with all gains 1 and unit noise, handy for hand arithmetic."""
    fields = dict(
        m_count=m, n_count=n, k_count=k,
        gain_up=np.ones((m, k)), gain_down=np.ones((n, k)), gain_cross=np.ones((m, n, k)),
        sigma_si_sq=0.5, sigma_bs_sq=0.5, sigma_due_sq=1.0,
        p_bs_max=1.0, p_uue_max=np.ones(m),
    )
    fields.update(overrides)
    return Scenario(**fields)


@pytest.fixture
def small_scenario():
    return make_scenario(3, 3, 3, seed=7)


def pytest_terminal_summary(terminalreporter):
    module = terminalreporter.config.pluginmanager.get_plugin("test_acceptance") or _find_acceptance()
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, text = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}")


def _find_acceptance():
    import sys

    for name, module in sys.modules.items():
        if name.endswith("test_acceptance"):
            return module
    return None
