import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdra.channel import (
    CellConfig,
    ConfigError,
    _drop_users,
    dbm_to_watts,
    generate_scenario,
    load_scenario,
    noise_power_per_subchannel,
    pathloss_gain,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    watts_to_dbm,
)
from fdra.model import ScenarioError


def test_noise_power_values():
    w = noise_power_per_subchannel(CellConfig())
    assert watts_to_dbm(w) == pytest.approx(-91.50910, abs=1e-4)
    assert w == pytest.approx(7.063e-13, rel=1e-3)
    unit = CellConfig(noise_psd_dbm_hz=0.0, bandwidth_hz=1.0, k_count=1)
    assert noise_power_per_subchannel(unit) == pytest.approx(1e-3, rel=1e-12)
    one = CellConfig(k_count=1)
    assert watts_to_dbm(noise_power_per_subchannel(one)) == pytest.approx(-126 + 10 * math.log10(180e3))


def test_dbm_round_trip():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(20.0) == pytest.approx(0.1)
    assert watts_to_dbm(dbm_to_watts(17.3)) == pytest.approx(17.3)


def test_pathloss_law():
    cfg = CellConfig()
    assert pathloss_gain(1000.0, cfg) == pytest.approx(10 ** -12.81)
    assert pathloss_gain(1.0, cfg) == pathloss_gain(10.0, cfg)
    assert pathloss_gain(50.0, cfg) > pathloss_gain(100.0, cfg)


def test_generated_noise_and_budget_ratios():
    s, _ = generate_scenario(CellConfig(seed=3))
    assert s.sigma_si_sq / s.sigma_bs_sq == pytest.approx(10 ** 0.3, rel=1e-12)
    assert s.sigma_si_sq / s.sigma_bs_sq == pytest.approx(1.9953, abs=1e-4)
    assert s.sigma_due_sq == s.sigma_bs_sq
    assert np.all(s.p_uue_max / s.p_bs_max == pytest.approx(10 ** -0.5, rel=1e-12))
    assert s.p_bs_max == pytest.approx(0.1)


def test_generation_deterministic():
    a, la = generate_scenario(CellConfig(m_count=3, n_count=4, k_count=5, seed=11))
    b, lb = generate_scenario(CellConfig(m_count=3, n_count=4, k_count=5, seed=11))
    assert a == b
    assert np.array_equal(la.uue_pos, lb.uue_pos)
    c, _ = generate_scenario(CellConfig(m_count=3, n_count=4, k_count=5, seed=12))
    assert a != c


@given(seed=st.integers(0, 2**64 - 1))
def test_positions_inside_cell(seed):
    cfg = CellConfig(m_count=3, n_count=3, k_count=2, seed=seed, radius_m=150.0)
    s, layout = generate_scenario(cfg)
    assert np.all(np.linalg.norm(layout.uue_pos, axis=1) <= 150.0)
    assert np.all(np.linalg.norm(layout.due_pos, axis=1) <= 150.0)
    assert s.shape == (3, 3, 2)


def test_fade_mean_is_unit():
    s, layout = generate_scenario(CellConfig(m_count=1, n_count=1, k_count=100_000, seed=1))
    large = s.gain_up[0] / s.gain_up[0].mean()
    # per-subchannel fades share one large-scale gain, so their mean is the scale
    cfg = CellConfig()
    fades = s.gain_up[0] / pathloss_gain(np.linalg.norm(layout.uue_pos[0]), cfg)
    assert fades.mean() == pytest.approx(1.0, rel=0.02)
    assert large.std() == pytest.approx(1.0, rel=0.05)


def test_radial_distribution_uniform_over_disk():
    rng = np.random.default_rng(5)
    r = np.linalg.norm(_drop_users(rng, 20_000, 1.0), axis=1)
    # for uniform drops r^2 is uniform on [0, 1]; chi-square over 10 bins
    counts, _ = np.histogram(r**2, bins=10, range=(0.0, 1.0))
    expected = len(r) / 10
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    assert chi2 < 27.88  # 99.9th percentile, 9 degrees of freedom


def test_config_validation_names_field():
    with pytest.raises(ConfigError, match="cell.radius_m"):
        CellConfig(radius_m=0.0)
    with pytest.raises(ConfigError, match="cell.k_count"):
        CellConfig(k_count=0)
    with pytest.raises(ConfigError, match="cell.bandwidth_hz"):
        CellConfig(bandwidth_hz=-1.0)
    with pytest.raises(ConfigError, match="cell.seed"):
        CellConfig(seed=-1)
    with pytest.raises(ConfigError, match="bogus"):
        CellConfig.from_dict({"bogus": 1})


def test_scenario_file_round_trip(tmp_path):
    s, _ = generate_scenario(CellConfig(m_count=3, n_count=2, k_count=4, seed=8))
    path = tmp_path / "s.json"
    save_scenario(s, path)
    assert load_scenario(path) == s
    assert not [p for p in tmp_path.iterdir() if p.name != "s.json"]


def test_scenario_file_validation(tmp_path):
    s, _ = generate_scenario(CellConfig(m_count=1, n_count=1, k_count=1, seed=0))
    doc = scenario_to_dict(s)
    doc["sigma_bs_sq"] = -1.0
    with pytest.raises(ScenarioError, match="sigma_bs_sq"):
        scenario_from_dict(doc)
    del doc["gain_cross"]
    with pytest.raises(ScenarioError, match="gain_cross"):
        scenario_from_dict(doc)


def test_hand_written_scenario(tmp_path):
    doc = {
        "format": "fdra-scenario", "version": 1,
        "m_count": 1, "n_count": 1, "k_count": 1,
        "gain_up": [[2e-9]], "gain_down": [[3e-9]], "gain_cross": [[[4e-11]]],
        "sigma_si_sq": 1.4e-12, "sigma_bs_sq": 7e-13, "sigma_due_sq": 7e-13,
        "p_bs_max": 0.1, "p_uue_max": [0.031622776601683794],
    }
    path = tmp_path / "one.json"
    path.write_text(json.dumps(doc))
    s = load_scenario(path)
    assert s.gain_up[0, 0] == 2e-9 and s.gain_down[0, 0] == 3e-9 and s.gain_cross[0, 0, 0] == 4e-11
    assert (s.sigma_si_sq, s.sigma_bs_sq, s.sigma_due_sq) == (1.4e-12, 7e-13, 7e-13)
    assert s.p_bs_max == 0.1 and s.p_uue_max[0] == 0.031622776601683794
