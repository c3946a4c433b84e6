"""Domain types for the tariff, household devices, charger and DER model.

Units: energy in kWh per interval, prices in $/kWh. The charger cap
``v_bar`` is already per-interval energy (a 3.6 kW charger on 1-hour
intervals has v_bar = 3.6 kWh). Charging efficiency is folded into the
demand at load time (see :func:`effective_demand`), so solver code always
sees an efficiency of 1.

All types are immutable after validation and safe to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


class Period(enum.Enum):
    """Pricing period of one interval; a horizon is Off1 then On then Off2."""

    OFF1 = "off1"
    ON = "on"
    OFF2 = "off2"


@dataclass(frozen=True)
class TariffSchedule:
    """Two-period NEM TOU tariff over a scheduling horizon of T intervals."""

    horizon_T: int
    period_of: tuple[Period, ...]
    pi_on_plus: float
    pi_on_minus: float
    pi_off_plus: float
    pi_off_minus: float
    gamma: float
    pi_zero: float = 0.0
    interval_hours: float = 1.0
    relaxed_a1: bool = False

    def pi_plus(self, t: int) -> float:
        """Retail (import) rate in interval t."""
        return self.pi_on_plus if self.period_of[t] is Period.ON else self.pi_off_plus

    def pi_minus(self, t: int) -> float:
        """Sell (export) rate in interval t."""
        return self.pi_on_minus if self.period_of[t] is Period.ON else self.pi_off_minus

    @property
    def off2_nonempty(self) -> bool:
        return Period.OFF2 in self.period_of

    def segment_lengths(self) -> tuple[int, int, int]:
        """(|Off1|, |On|, |Off2|) interval counts."""
        n1 = sum(1 for p in self.period_of if p is Period.OFF1)
        n2 = sum(1 for p in self.period_of if p is Period.ON)
        return n1, n2, self.horizon_T - n1 - n2


@dataclass(frozen=True)
class DeviceModel:
    """One flexible load with quadratic utility alpha*d - beta*d^2/2."""

    alpha: float
    beta: float
    d_bar: float

    def utility(self, d: float) -> float:
        return self.alpha * d - 0.5 * self.beta * d * d


@dataclass(frozen=True)
class ChargerModel:
    """EV charger: per-interval energy cap (kWh) and efficiency in (0, 1]."""

    v_bar: float
    eta: float = 1.0


@dataclass(frozen=True)
class DerModel:
    """Per-interval rectified-normal BTM generation: r_t = max(0, N(mu_t, sigma_t^2))."""

    mu: tuple[float, ...]
    sigma: tuple[float, ...]


@dataclass(frozen=True)
class DpState:
    """State at the start of an interval: time index, remaining demand, realized DER."""

    t: int
    y: float
    r: float


@dataclass(frozen=True)
class ValidatedConfig:
    """Bundle of all model pieces after :func:`validate` has accepted them."""

    tariff: TariffSchedule
    charger: ChargerModel
    devices: tuple[DeviceModel, ...]
    der: DerModel
    # flat device parameter arrays, handy for the kernels
    alpha: np.ndarray = field(repr=False, default=None)
    beta: np.ndarray = field(repr=False, default=None)
    d_bar: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.array([d.alpha for d in self.devices]))
        object.__setattr__(self, "beta", np.array([d.beta for d in self.devices]))
        object.__setattr__(self, "d_bar", np.array([d.d_bar for d in self.devices]))

    @property
    def T(self) -> int:
        return self.tariff.horizon_T

    @property
    def v_bar(self) -> float:
        return self.charger.v_bar


_A1_CHAIN = ("pi_off_minus", "pi_on_minus", "pi_off_plus", "pi_on_plus", "gamma")


def _check_a1(tariff: TariffSchedule) -> None:
    if tariff.relaxed_a1:
        # Relaxed mode: sell rate raised to the retail rate within each period.
        if tariff.pi_on_minus != tariff.pi_on_plus or tariff.pi_off_minus != tariff.pi_off_plus:
            raise ConfigError("relaxed-A1 mode requires pi_minus == pi_plus in each period")
        if not (tariff.pi_off_plus < tariff.pi_on_plus < tariff.gamma):
            raise ConfigError("relaxed-A1 mode requires pi_off_plus < pi_on_plus < gamma")
        return
    values = [getattr(tariff, name) for name in _A1_CHAIN]
    for (lo_name, lo), (hi_name, hi) in zip(
        zip(_A1_CHAIN, values), zip(_A1_CHAIN[1:], values[1:])
    ):
        if not hi > lo:
            raise ConfigError(f"A1 violated: {hi_name} ≤ {lo_name}")


def validate(
    tariff: TariffSchedule,
    charger: ChargerModel,
    devices: tuple[DeviceModel, ...] | list[DeviceModel],
    der: DerModel,
) -> ValidatedConfig:
    """Check every model invariant; return the immutable config bundle.

    Raises :class:`ConfigError` naming the first violated invariant.
    """
    if tariff.horizon_T < 1:
        raise ConfigError("horizon_T must be >= 1")
    if len(tariff.period_of) != tariff.horizon_T:
        raise ConfigError("period_of length must equal horizon_T")
    if tariff.interval_hours <= 0:
        raise ConfigError("interval_hours must be positive")
    for name in ("pi_on_plus", "pi_on_minus", "pi_off_plus", "pi_off_minus", "gamma"):
        value = getattr(tariff, name)
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be positive")
    if tariff.pi_zero < 0:
        raise ConfigError("pi_zero must be nonnegative")
    _check_a1(tariff)

    # Contiguous partition in the order Off1, On, Off2 (segments may be empty).
    rank = {Period.OFF1: 0, Period.ON: 1, Period.OFF2: 2}
    ranks = [rank[p] for p in tariff.period_of]
    if any(b < a for a, b in zip(ranks, ranks[1:])):
        raise ConfigError("period_of must be contiguous in the order Off1, On, Off2")

    if charger.v_bar <= 0:
        raise ConfigError("v_bar must be positive")
    if not (0.0 < charger.eta <= 1.0):
        raise ConfigError("eta must lie in (0, 1]")

    if len(devices) == 0:
        raise ConfigError("at least one device is required")
    for i, dev in enumerate(devices):
        if dev.alpha <= 0:
            raise ConfigError(f"device {i}: alpha must be positive")
        if dev.beta <= 0:
            raise ConfigError(f"device {i}: beta must be positive")
        if dev.d_bar < 0:
            raise ConfigError(f"device {i}: d_bar must be nonnegative")

    if len(der.mu) != tariff.horizon_T or len(der.sigma) != tariff.horizon_T:
        raise ConfigError("der mu/sigma lengths must equal horizon_T")
    if any(s < 0 for s in der.sigma):
        raise ConfigError("sigma must be nonnegative")
    if any(not math.isfinite(m) for m in der.mu):
        raise ConfigError("mu must be finite")

    return ValidatedConfig(tariff, charger, tuple(devices), der)


def nem_payment(z: float, pi_plus: float, pi_minus: float, pi_zero: float = 0.0) -> float:
    """NEM bill for net consumption z: retail rate on imports, sell rate on exports."""
    rate = pi_plus if z >= 0 else pi_minus
    return z * rate + pi_zero


def marginal_inverse(device: DeviceModel, pi: float) -> float:
    """Consumption at which marginal utility equals pi, clamped to [0, d_bar]."""
    return min(max((device.alpha - pi) / device.beta, 0.0), device.d_bar)


def effective_demand(y_physical: float, eta: float) -> float:
    """Rescale a charging demand so downstream code can assume eta = 1."""
    return y_physical / eta
