"""Configuration: TOML file parsing, defaults, and scheduling-window construction.

A config file describes one TOU *day* (hourly pricing pattern, charger,
devices, per-hour generation statistics) plus simulation settings. A
scheduling window is the slice of that day between plug-in time and the
charging deadline; :func:`window_config` compiles a window into the
validated per-interval model the solver consumes.

File format (all keys optional; defaults below):

    [tariff]
    interval_hours = 1.0
    on_peak       = "16:00-21:00"
    pi_on_plus    = 0.55      # $/kWh retail, on-peak
    pi_on_minus   = 0.37      # $/kWh sell, on-peak
    pi_off_plus   = 0.46
    pi_off_minus  = 0.28
    pi_zero       = 0.0       # $ fixed charge per interval
    gamma         = 1.0       # $/kWh terminal penalty
    relaxed_a1    = false     # opt-in: sell rate equals retail rate

    [charger]
    v_bar_kw = 3.6
    eta      = 1.0

    [[devices]]
    alpha = 1.2               # $/kWh marginal utility at zero consumption
    beta  = 0.35              # $/kWh^2 utility curvature
    d_bar = 4.0               # kWh per-interval cap

    [der]
    mu_by_hour    = [ ... 24 values, kWh generated per hour ... ]
    sigma_by_hour = [ ... 24 values ... ]

    [sim]
    n_trials = 20000
    seed     = 20240817
    horizon_hours = 10
    plugin_hour   = 12        # used by solve/decide/oracle; simulate draws it
    s_req_mean_kwh = 10.0
    s_req_sd_kwh   = 6.0
    # s_req_values_kwh = [8.0, 12.0]   # empirical alternative to the truncated normal
    grid_points_per_vbar = 40
    quad_nodes = 64
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .model import (
    ChargerModel,
    DerModel,
    DeviceModel,
    Period,
    TariffSchedule,
    ValidatedConfig,
    validate,
)

HOURS_PER_DAY = 24


def _default_der_curves() -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Synthetic residential-solar day: bell over 06:00-19:00, noisy at half scale.

    Clearly synthetic stand-in for fitted residential generation data; peak
    6 kWh/h around 12:30, zero at night.
    """
    mu = []
    for hour in range(HOURS_PER_DAY):
        mid = hour + 0.5
        sun = math.sin(math.pi * (mid - 6.0) / 13.0) if 6.0 < mid < 19.0 else 0.0
        mu.append(6.0 * sun ** 1.5)
    sigma = [0.5 * m for m in mu]
    return tuple(mu), tuple(sigma)


@dataclass(frozen=True)
class SimSettings:
    """Monte Carlo harness settings from the [sim] section."""

    n_trials: int = 20_000
    seed: int = 20240817
    horizon_hours: float = 10.0
    plugin_hour: float = 12.0
    s_req_mean_kwh: float = 10.0
    s_req_sd_kwh: float = 6.0
    s_req_values_kwh: tuple[float, ...] | None = None
    grid_points_per_vbar: int = 40
    quad_nodes: int = 64


@dataclass(frozen=True)
class DayConfig:
    """One TOU day plus household hardware and simulation settings."""

    interval_hours: float = 1.0
    on_start_hour: float = 16.0
    on_end_hour: float = 21.0
    pi_on_plus: float = 0.55
    pi_on_minus: float = 0.37
    pi_off_plus: float = 0.46
    pi_off_minus: float = 0.28
    pi_zero: float = 0.0
    gamma: float = 1.0
    relaxed_a1: bool = False
    v_bar_kw: float = 3.6
    eta: float = 1.0
    devices: tuple[DeviceModel, ...] = (
        DeviceModel(alpha=1.3, beta=0.22, d_bar=4.5),   # HVAC-scale flexible load
        DeviceModel(alpha=0.95, beta=0.5, d_bar=2.0),   # appliance-scale load
    )
    mu_by_hour: tuple[float, ...] = field(default_factory=lambda: _default_der_curves()[0])
    sigma_by_hour: tuple[float, ...] = field(default_factory=lambda: _default_der_curves()[1])
    sim: SimSettings = SimSettings()

    @property
    def v_bar(self) -> float:
        """Charge cap in kWh per interval."""
        return self.v_bar_kw * self.interval_hours

    @property
    def intervals_per_day(self) -> int:
        n = HOURS_PER_DAY / self.interval_hours
        if abs(n - round(n)) > 1e-9:
            raise ConfigError("interval_hours must divide 24")
        return int(round(n))

    def horizon_intervals(self, horizon_hours: float | None = None) -> int:
        hours = self.sim.horizon_hours if horizon_hours is None else horizon_hours
        n = hours / self.interval_hours
        if abs(n - round(n)) > 1e-9:
            raise ConfigError("horizon_hours must be a multiple of interval_hours")
        return int(round(n))


def default_day_config() -> DayConfig:
    return DayConfig()


_TIME_RANGE = re.compile(r"^(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})$")


def _parse_on_peak(text: str) -> tuple[float, float]:
    m = _TIME_RANGE.match(text.strip())
    if not m:
        raise ConfigError(f"on_peak must look like '16:00-21:00' (got {text!r})")
    start = int(m.group(1)) + int(m.group(2)) / 60.0
    end = int(m.group(3)) + int(m.group(4)) / 60.0
    if not (0.0 <= start <= end <= 24.0):
        raise ConfigError("on_peak hours must satisfy 0 <= start <= end <= 24")
    return start, end


def _take(section: dict, known: dict[str, str]) -> dict:
    """Map file keys onto DayConfig fields, rejecting unknown keys."""
    out = {}
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        if known[key] is not None:
            out[known[key]] = value
    return out


def parse_config(path) -> DayConfig:
    """Load and validate a TOML config file; missing keys take the defaults."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:  # message carries line/column
            raise ConfigError(f"config parse error: {exc}") from exc

    kwargs: dict = {}
    sim_kwargs: dict = {}
    for section in raw:
        if section not in ("tariff", "charger", "devices", "der", "sim"):
            raise ConfigError(f"unknown config section: [{section}]")

    tariff = raw.get("tariff", {})
    kwargs.update(_take(tariff, {
        "interval_hours": "interval_hours", "on_peak": None,
        "pi_on_plus": "pi_on_plus", "pi_on_minus": "pi_on_minus",
        "pi_off_plus": "pi_off_plus", "pi_off_minus": "pi_off_minus",
        "pi_zero": "pi_zero", "gamma": "gamma", "relaxed_a1": "relaxed_a1",
    }))
    if "on_peak" in tariff:
        kwargs["on_start_hour"], kwargs["on_end_hour"] = _parse_on_peak(tariff["on_peak"])

    kwargs.update(_take(raw.get("charger", {}), {"v_bar_kw": "v_bar_kw", "eta": "eta"}))

    if "devices" in raw:
        devices = []
        for i, dev in enumerate(raw["devices"]):
            extra = set(dev) - {"alpha", "beta", "d_bar"}
            if extra:
                raise ConfigError(f"device {i}: unknown keys {sorted(extra)}")
            try:
                devices.append(DeviceModel(float(dev["alpha"]), float(dev["beta"]),
                                           float(dev["d_bar"])))
            except KeyError as exc:
                raise ConfigError(f"device {i}: missing key {exc}") from exc
        kwargs["devices"] = tuple(devices)

    der = raw.get("der", {})
    der_map = _take(der, {"mu_by_hour": "mu_by_hour", "sigma_by_hour": "sigma_by_hour"})
    for name, values in der_map.items():
        if len(values) != HOURS_PER_DAY:
            raise ConfigError(f"{name} must have exactly {HOURS_PER_DAY} entries")
        kwargs[name] = tuple(float(v) for v in values)

    sim_kwargs.update(_take(raw.get("sim", {}), {
        "n_trials": "n_trials", "seed": "seed", "horizon_hours": "horizon_hours",
        "plugin_hour": "plugin_hour", "s_req_mean_kwh": "s_req_mean_kwh",
        "s_req_sd_kwh": "s_req_sd_kwh", "s_req_values_kwh": "s_req_values_kwh",
        "grid_points_per_vbar": "grid_points_per_vbar", "quad_nodes": "quad_nodes",
    }))
    if "s_req_values_kwh" in sim_kwargs:
        sim_kwargs["s_req_values_kwh"] = tuple(float(v) for v in sim_kwargs["s_req_values_kwh"])

    day = DayConfig(sim=SimSettings(**sim_kwargs), **kwargs)
    validate_day(day)
    return day


def validate_day(day: DayConfig) -> None:
    """Surface model-level problems (prices, A1, device signs) at load time."""
    day.intervals_per_day
    for name in ("on_start_hour", "on_end_hour"):
        ratio = getattr(day, name) / day.interval_hours
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(f"{name} must align with interval boundaries")
    window_config(day, 0, 1)


def plugin_index(day: DayConfig, plugin_hour: float) -> int:
    idx = plugin_hour / day.interval_hours
    if abs(idx - round(idx)) > 1e-9:
        raise ConfigError("plugin_hour must be a multiple of interval_hours")
    return int(round(idx))


def admissible_plugin_indices(day: DayConfig, horizon_T: int) -> np.ndarray:
    """Plug-in interval indices whose deadline stays within the TOU day."""
    n_day = day.intervals_per_day
    last = n_day - horizon_T
    if last < 0:
        raise ConfigError("horizon longer than the configured day")
    return np.arange(last + 1)


def window_config(day: DayConfig, plugin_idx: int, horizon_T: int) -> ValidatedConfig:
    """Validated per-interval model for the window [plugin, plugin + horizon)."""
    h = day.interval_hours
    if plugin_idx < 0 or (plugin_idx + horizon_T) * h > HOURS_PER_DAY + 1e-9:
        raise ConfigError("scheduling window must fit inside the 24-hour day")
    periods = []
    mu = []
    sigma = []
    for i in range(horizon_T):
        start_hour = (plugin_idx + i) * h
        if day.on_start_hour <= start_hour < day.on_end_hour:
            periods.append(Period.ON)
        elif start_hour < day.on_start_hour:
            periods.append(Period.OFF1)
        else:
            periods.append(Period.OFF2)
        bucket = min(int(math.floor(start_hour + 1e-9)), HOURS_PER_DAY - 1)
        mu.append(day.mu_by_hour[bucket] * h)
        sigma.append(day.sigma_by_hour[bucket] * h)
    tariff = TariffSchedule(
        horizon_T=horizon_T, period_of=tuple(periods),
        pi_on_plus=day.pi_on_plus, pi_on_minus=day.pi_on_minus,
        pi_off_plus=day.pi_off_plus, pi_off_minus=day.pi_off_minus,
        gamma=day.gamma, pi_zero=day.pi_zero, interval_hours=h,
        relaxed_a1=day.relaxed_a1)
    charger = ChargerModel(v_bar=day.v_bar, eta=day.eta)
    der = DerModel(tuple(mu), tuple(sigma))
    return validate(tariff, charger, day.devices, der)


def with_price_gap(day: DayConfig, gap: float) -> DayConfig:
    """Fix the retail rates, set each period's sell rate retail - gap."""
    return replace(day, pi_on_minus=day.pi_on_plus - gap,
                   pi_off_minus=day.pi_off_plus - gap)


def config_digest(day: DayConfig) -> str:
    """Content hash of the effective configuration (key order independent)."""
    payload = json.dumps(asdict(day), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
