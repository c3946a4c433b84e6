"""Co-optimization of household consumption and EV charging under NEM TOU tariffs.

Offline solver for the procrastination-threshold charging policy, the
three-zone per-interval decision engine, a brute-force validation oracle,
and a seeded Monte Carlo harness comparing the policy against a
renewable-independent open-loop baseline.
"""

__version__ = "0.1.0"

from .errors import ConfigError, NumericalInvariantError
from .model import (
    ChargerModel,
    DerModel,
    DeviceModel,
    DpState,
    Period,
    TariffSchedule,
    ValidatedConfig,
    effective_demand,
    marginal_inverse,
    nem_payment,
    validate,
)
from .oracle import OracleConfig, oracle_solve, oracle_thresholds
from .policy import Decision, Zone, baseline_decide, decide, zone_thresholds
from .solver import (
    ThresholdTable,
    ValueTable,
    backward_induction,
    expected_stage_value,
    extract_thresholds,
    invert_slope,
)

__all__ = [
    "ChargerModel", "ConfigError", "Decision", "DerModel", "DeviceModel",
    "DpState", "NumericalInvariantError", "OracleConfig", "Period",
    "TariffSchedule", "ThresholdTable", "ValidatedConfig", "ValueTable",
    "Zone", "backward_induction", "baseline_decide", "decide",
    "effective_demand", "expected_stage_value", "extract_thresholds",
    "invert_slope", "marginal_inverse", "nem_payment", "oracle_solve",
    "oracle_thresholds", "validate", "zone_thresholds", "__version__",
]
