"""Random single-cell instances and the JSON scenario file format.

Channel model
-------------
* Users are dropped uniformly in a disk of radius ``radius_m`` around the BS.
* Large-scale gain of a link of length d: ``PL(dB) = a + b log10(d_km)`` with
  ``a = 128.1``, ``b = 37.6`` by default and d floored at ``min_distance_m``.
  The same law is applied to BS-user links and to UUE-to-DUE links.
* Small-scale fading: i.i.d. unit-mean exponential power per subchannel
  (flat Rayleigh amplitude).

Random draws use numpy's PCG64 generator (``numpy.random.default_rng(seed)``)
in this fixed order: UUE radii and angles, DUE radii and angles, uplink fades
(M x K), downlink fades (N x K), cross fades (M x N x K).  The scenario file,
not the seed, is the portable exchange format.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .model import Scenario, ScenarioError

SCENARIO_FORMAT = "fdra-scenario"
SCENARIO_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


@dataclass(frozen=True)
class CellConfig:
    radius_m: float = 200.0
    m_count: int = 8
    n_count: int = 8
    k_count: int = 64
    bandwidth_hz: float = 180e3
    noise_psd_dbm_hz: float = -126.0
    si_over_noise_db: float = 3.0
    p_bs_dbm: float = 20.0
    uue_offset_db: float = -5.0
    seed: int = 0
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6
    min_distance_m: float = 10.0

    def __post_init__(self) -> None:
        for name in ("m_count", "n_count", "k_count"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"cell.{name}: must be an integer >= 1, got {value!r}")
        for name in ("radius_m", "bandwidth_hz", "min_distance_m"):
            value = getattr(self, name)
            if not _is_real(value) or not value > 0:
                raise ConfigError(f"cell.{name}: must be a finite number > 0, got {value!r}")
        for name in ("noise_psd_dbm_hz", "si_over_noise_db", "p_bs_dbm", "uue_offset_db",
                     "pathloss_intercept_db", "pathloss_slope_db"):
            if not _is_real(getattr(self, name)):
                raise ConfigError(f"cell.{name}: must be a finite number, got {getattr(self, name)!r}")
        seed = self.seed
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
            raise ConfigError(f"cell.seed: must be an unsigned 64-bit integer, got {seed!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "CellConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"cell: unknown field(s) {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "CellConfig":
        return CellConfig(**{**asdict(self), **changes})


def _is_real(value) -> bool:
    return (
        not isinstance(value, bool)
        and isinstance(value, (int, float, np.integer, np.floating))
        and math.isfinite(value)
    )


@dataclass(frozen=True)
class UserLayout:
    uue_pos: np.ndarray  # (M, 2) metres, BS at the origin
    due_pos: np.ndarray  # (N, 2)


def noise_power_per_subchannel(config: CellConfig) -> float:
    """Thermal noise power in one subchannel, in watts."""
    dbm = config.noise_psd_dbm_hz + 10.0 * math.log10(config.bandwidth_hz / config.k_count)
    return float(dbm_to_watts(dbm))


def pathloss_gain(distance_m, config: CellConfig) -> np.ndarray:
    """Linear large-scale power gain for link length(s) ``distance_m``."""
    d_km = np.maximum(np.asarray(distance_m, dtype=float), config.min_distance_m) / 1000.0
    pl_db = config.pathloss_intercept_db + config.pathloss_slope_db * np.log10(d_km)
    return 10.0 ** (-pl_db / 10.0)


def _drop_users(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(count))
    theta = 2.0 * np.pi * rng.random(count)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_scenario(config: CellConfig) -> tuple[Scenario, UserLayout]:
    """Draw a scenario (and the user positions behind it) for ``config``."""
    rng = np.random.default_rng(config.seed)
    M, N, K = config.m_count, config.n_count, config.k_count
    uue = _drop_users(rng, M, config.radius_m)
    due = _drop_users(rng, N, config.radius_m)

    large_up = pathloss_gain(np.linalg.norm(uue, axis=1), config)
    large_down = pathloss_gain(np.linalg.norm(due, axis=1), config)
    large_cross = pathloss_gain(
        np.linalg.norm(uue[:, None, :] - due[None, :, :], axis=2), config
    )
    fade_up = rng.exponential(1.0, (M, K))
    fade_down = rng.exponential(1.0, (N, K))
    fade_cross = rng.exponential(1.0, (M, N, K))

    noise = noise_power_per_subchannel(config)
    p_bs = float(dbm_to_watts(config.p_bs_dbm))
    p_uue = float(dbm_to_watts(config.p_bs_dbm + config.uue_offset_db))
    scenario = Scenario(
        m_count=M,
        n_count=N,
        k_count=K,
        gain_up=large_up[:, None] * fade_up,
        gain_down=large_down[:, None] * fade_down,
        gain_cross=large_cross[:, :, None] * fade_cross,
        sigma_si_sq=noise * 10.0 ** (config.si_over_noise_db / 10.0),
        sigma_bs_sq=noise,
        sigma_due_sq=noise,
        p_bs_max=p_bs,
        p_uue_max=np.full(M, p_uue),
    )
    return scenario, UserLayout(uue, due)


# -- scenario files ----------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "version": SCENARIO_VERSION,
        "m_count": scenario.m_count,
        "n_count": scenario.n_count,
        "k_count": scenario.k_count,
        "gain_up": scenario.gain_up.tolist(),
        "gain_down": scenario.gain_down.tolist(),
        "gain_cross": scenario.gain_cross.tolist(),
        "sigma_si_sq": scenario.sigma_si_sq,
        "sigma_bs_sq": scenario.sigma_bs_sq,
        "sigma_due_sq": scenario.sigma_due_sq,
        "p_bs_max": scenario.p_bs_max,
        "p_uue_max": scenario.p_uue_max.tolist(),
    }


_REQUIRED = (
    "m_count", "n_count", "k_count", "gain_up", "gain_down", "gain_cross",
    "sigma_si_sq", "sigma_bs_sq", "sigma_due_sq", "p_bs_max", "p_uue_max",
)


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    if data.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
        raise ScenarioError(f"format: expected {SCENARIO_FORMAT!r}, got {data.get('format')!r}")
    missing = [name for name in _REQUIRED if name not in data]
    if missing:
        raise ScenarioError(f"missing field(s): {', '.join(missing)}")
    return Scenario(**{name: data[name] for name in _REQUIRED})


def save_scenario(scenario: Scenario, path) -> None:
    """Write ``scenario`` as JSON (floats in shortest round-trip form)."""
    path = Path(path)
    text = json.dumps(scenario_to_dict(scenario), allow_nan=False)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(data)
