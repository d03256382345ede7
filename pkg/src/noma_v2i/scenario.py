"""Scenario parameters for the two-user NOMA downlink.

Powers are kept in dBm on the config (that is how experiments are usually
reported) and converted to watts once, when the config is constructed.
Everything downstream works in SI units.

Config files are JSON objects whose keys are exactly the dataclass field
names below; unknown or missing keys are rejected.  See ``configs/`` for the
two reference scenarios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence


class ConfigError(ValueError):
    """Raised when a config cannot be parsed or violates an invariant."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


def spectral_threshold(Y: float, r: float, tau_s: float, W_hz: float) -> float:
    """SINR a slot needs so that ``r`` packets of ``Y`` bits fit in it.

    Inverts ``r = tau*W/Y * log2(1 + sinr)``.
    """
    if r < 0:
        raise ValueError(f"rate must be nonnegative, got {r}")
    return 2.0 ** (Y * r / (tau_s * W_hz)) - 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    T: int
    N: int
    delta: float
    tau_s: float
    W_hz: float
    P_dbm: float
    beta1: float
    beta2: float
    sigma1_sq_dbm: float
    sigma2_sq_dbm: float
    Y1: int
    Y2: int
    power_set: tuple[tuple[float, float], ...]
    rate_set_1: tuple[int, ...]
    rate_set_2: tuple[int, ...]

    # derived, SI units
    P_w: float = field(init=False, repr=False)
    sigma1_sq_w: float = field(init=False, repr=False)
    sigma2_sq_w: float = field(init=False, repr=False)

    def __post_init__(self):
        # normalise containers so the config stays hashable
        object.__setattr__(
            self, "power_set", tuple((float(a), float(b)) for a, b in self.power_set)
        )
        object.__setattr__(self, "rate_set_1", tuple(int(r) for r in self.rate_set_1))
        object.__setattr__(self, "rate_set_2", tuple(int(r) for r in self.rate_set_2))
        object.__setattr__(self, "P_w", dbm_to_watt(self.P_dbm))
        object.__setattr__(self, "sigma1_sq_w", dbm_to_watt(self.sigma1_sq_dbm))
        object.__setattr__(self, "sigma2_sq_w", dbm_to_watt(self.sigma2_sq_dbm))
        self._validate()

    def _validate(self):
        for name in ("T", "N", "Y1", "Y2"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta}")
        for name in ("tau_s", "W_hz", "beta1", "beta2"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be a positive finite number, got {value}")
        for name in ("P_w", "sigma1_sq_w", "sigma2_sq_w"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive after dBm conversion, got {value}")
        if not self.power_set:
            raise ConfigError("power_set must not be empty")
        for v1, v2 in self.power_set:
            if v1 < 0 or v2 < 0:
                raise ConfigError(f"power pair ({v1}, {v2}) has a negative fraction")
            # small slack for pairs like (0.7, 0.3) written in decimal
            if v1 + v2 > 1.0 + 1e-12:
                raise ConfigError(f"power pair ({v1}, {v2}) exceeds total power: V1 + V2 > 1")
        for name in ("rate_set_1", "rate_set_2"):
            rates = getattr(self, name)
            if 0 not in rates:
                raise ConfigError(f"{name} must contain 0")
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ConfigError(f"{name} must be strictly increasing, got {list(rates)}")

    @property
    def tau_w(self) -> float:
        return self.tau_s * self.W_hz

    def snr_scale(self, user: int) -> float:
        """P * beta_k / sigma_k^2, the mean receive SNR at full power."""
        if user == 1:
            return self.P_w * self.beta1 / self.sigma1_sq_w
        return self.P_w * self.beta2 / self.sigma2_sq_w

    def threshold(self, user: int, r: float) -> float:
        Y = self.Y1 if user == 1 else self.Y2
        return spectral_threshold(Y, r, self.tau_s, self.W_hz)

    def with_changes(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if not f.init:
                continue
            value = getattr(self, f.name)
            if f.name == "power_set":
                value = [list(p) for p in value]
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


CONFIG_KEYS = tuple(f.name for f in fields(ScenarioConfig) if f.init)


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in CONFIG_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    try:
        pairs = data["power_set"]
        if any(len(p) != 2 for p in pairs):
            raise ConfigError("power_set entries must be [V1, V2] pairs")
        return ScenarioConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


REFERENCE_POWER_SET: Sequence[tuple[float, float]] = (
    (0.0, 0.0), (0.0, 1.0), (0.1, 0.9), (0.3, 0.7),
    (0.5, 0.5), (0.7, 0.3), (0.9, 0.1), (1.0, 0.0),
)


def reference_scenario(**overrides) -> ScenarioConfig:
    """The single-placement experiment (T=4, N=13, 400 actions)."""
    params = dict(
        T=4, N=13, delta=0.1, tau_s=1e-3, W_hz=1e6, P_dbm=30.0,
        beta1=1e-6, beta2=1e-6, sigma1_sq_dbm=-70.0, sigma2_sq_dbm=-70.0,
        Y1=1500, Y2=1500, power_set=REFERENCE_POWER_SET,
        rate_set_1=(0, 1, 2, 3, 4), rate_set_2=(0, 1, 2, 3, 4),
    )
    params.update(overrides)
    return ScenarioConfig(**params)


def placement_scenario(**overrides) -> ScenarioConfig:
    """Template for the random-placement sweep (T=10, N=16, Y=1650)."""
    params = dict(T=10, N=16, Y1=1650, Y2=1650, rate_set_1=(0, 1, 2), rate_set_2=(0, 1, 2))
    params.update(overrides)
    return reference_scenario(**params)


def large_scale_fading(distance_m: float) -> float:
    return 1e-3 * distance_m ** -2
