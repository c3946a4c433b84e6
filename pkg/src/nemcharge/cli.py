"""Command-line entry point.

Subcommands: ``solve``, ``decide``, ``oracle``, ``simulate``, ``sweep``.
Every file-producing run also writes a ``manifest.json`` (config digest,
tool version, seed, subcommand, timestamp) next to its outputs. Exit codes:
0 success, 1 configuration/validation error, 2 numerical-invariant breach,
64 usage error.

All floats are serialized with 9 significant digits; rerunning a subcommand
with the same config and seed reproduces every CSV/JSON byte for byte
(set ``SOURCE_DATE_EPOCH`` to pin the manifest timestamp as well). The
``NEMCHARGE_OUT`` environment variable overrides the default output
directory; nothing else is read from the environment.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

from . import __version__, oracle as oracle_mod, sim as sim_mod
from ._fmt import fmt9
from .config import (
    DayConfig,
    config_digest,
    default_day_config,
    parse_config,
    plugin_index,
    window_config,
)
from .errors import ConfigError, NumericalInvariantError
from .model import DpState, effective_demand
from .policy import decide as policy_decide
from .solver import write_thresholds_csv, write_value_table_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2, which we reserve
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
    else:
        moment = _dt.datetime.now(_dt.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_manifest(out_dir: Path, day: DayConfig, subcommand: str, seed: int,
                    outputs: list[str]) -> None:
    manifest = {
        "config_digest": config_digest(day),
        "tool_version": __version__,
        "seed": seed,
        "subcommand": subcommand,
        "timestamp": _timestamp(),
        "outputs": outputs,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_day(args) -> DayConfig:
    return parse_config(args.config) if args.config else default_day_config()


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("NEMCHARGE_OUT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solved_window(day: DayConfig, horizon_hours: float | None = None):
    T = day.horizon_intervals(horizon_hours)
    cfg = window_config(day, plugin_index(day, day.sim.plugin_hour), T)
    return sim_mod.solve_window(cfg, day.sim.grid_points_per_vbar, day.sim.quad_nodes)


def _cmd_solve(args) -> int:
    day = _load_day(args)
    out = _out_dir(args)
    solved = _solved_window(day)
    write_value_table_csv(solved.table, out / "value_table.csv")
    write_thresholds_csv(solved.thresholds, solved.cfg.tariff, out / "thresholds.csv")
    _write_manifest(out, day, "solve", day.sim.seed,
                    ["value_table.csv", "thresholds.csv"])
    print(f"wrote value_table.csv and thresholds.csv to {out}")
    return EXIT_OK


def _cmd_decide(args) -> int:
    day = _load_day(args)
    solved = _solved_window(day)
    y = effective_demand(args.y, day.eta)
    decision = policy_decide(DpState(args.t, y, args.r), solved.thresholds,
                             solved.table, solved.cfg)
    payload = {
        "t": args.t,
        "y_kwh": float(fmt9(y)),
        "r_kwh": float(fmt9(args.r)),
        "zone": decision.zone.value,
        "v_kwh": float(fmt9(decision.v)),
        "d_kwh": [float(fmt9(x)) for x in decision.d],
        "z_kwh": float(fmt9(decision.z)),
        "nu_usd_per_kwh": float(fmt9(decision.nu)),
    }
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    day = _load_day(args)
    T = day.horizon_intervals()
    cfg = window_config(day, plugin_index(day, day.sim.plugin_hour), T)
    ocfg = oracle_mod.OracleConfig(action_step=args.action_step, r_nodes=args.r_nodes)
    sol = oracle_mod.oracle_solve(cfg, ocfg)
    tau_emp, delta_emp = oracle_mod.oracle_thresholds(sol)
    s_req = effective_demand(args.s_req, day.eta)
    payload = {
        "expected_surplus": float(fmt9(sol.expected_surplus(s_req))),
        "empirical_tau": [float(fmt9(x)) for x in tau_emp],
        "empirical_delta": [float(fmt9(x)) for x in delta_emp],
    }
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from dataclasses import replace

    day = _load_day(args)
    sim_settings = day.sim
    if args.trials is not None:
        sim_settings = replace(sim_settings, n_trials=args.trials)
    if args.seed is not None:
        sim_settings = replace(sim_settings, seed=args.seed)
    day = replace(day, sim=sim_settings)
    out = _out_dir(args)
    outcome = sim_mod.run_trials(day)
    sim_mod.write_results_csv(outcome, out / "results.csv")
    _write_manifest(out, day, "simulate", sim_settings.seed, ["results.csv"])
    mo, mb, gap, lo, hi = outcome.gap_stats()
    print(f"n={outcome.n_trials} mean_opt={fmt9(mo)} mean_base={fmt9(mb)} "
          f"gap_pct={fmt9(gap)} ci95=[{fmt9(lo)},{fmt9(hi)}]")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    day = _load_day(args)
    sim_settings = day.sim
    if args.trials is not None:
        sim_settings = replace(sim_settings, n_trials=args.trials)
    if args.seed is not None:
        sim_settings = replace(sim_settings, seed=args.seed)
    day = replace(day, sim=sim_settings)
    out = _out_dir(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values must list at least one number")
    if args.param == "horizon":
        rows = sim_mod.sweep_horizon(day, values)
    else:
        rows, skipped = sim_mod.sweep_price_gap(day, values)
        for gap, reason in skipped:
            print(f"skipped price gap {gap}: {reason}", file=sys.stderr)
    sim_mod.write_sweep_csv(rows, out / "sweep.csv")
    _write_manifest(out, day, "sweep", sim_settings.seed, ["sweep.csv"])
    print(f"wrote sweep.csv ({len(rows)} rows) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nemcharge",
                     description="EV charging and consumption co-optimization "
                                 "under NEM TOU tariffs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="TOML config file (defaults used if omitted)")
        p.add_argument("-o", "--out", help="output directory (default: $NEMCHARGE_OUT or ./out)")

    p_solve = sub.add_parser("solve", help="solve thresholds and value table")
    common(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_decide = sub.add_parser("decide", help="one-state optimal decision as JSON")
    common(p_decide)
    p_decide.add_argument("--t", type=int, required=True, help="interval index")
    p_decide.add_argument("--y", type=float, required=True, help="remaining demand, kWh")
    p_decide.add_argument("--r", type=float, required=True, help="realized generation, kWh")
    p_decide.set_defaults(func=_cmd_decide)

    p_oracle = sub.add_parser("oracle", help="brute-force reference solve as JSON")
    common(p_oracle)
    p_oracle.add_argument("--s-req", type=float, default=10.0, help="initial demand, kWh")
    p_oracle.add_argument("--action-step", type=float, default=0.01)
    p_oracle.add_argument("--r-nodes", type=int, default=5)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_sim = sub.add_parser("simulate", help="paired Monte Carlo comparison")
    common(p_sim)
    p_sim.add_argument("--trials", type=int, help="override [sim].n_trials")
    p_sim.add_argument("--seed", type=int, help="override [sim].seed")
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="gap sweep over horizon length or price gap")
    common(p_sweep)
    p_sweep.add_argument("--param", choices=["horizon", "price-gap"], required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--trials", type=int, help="override [sim].n_trials")
    p_sweep.add_argument("--seed", type=int, help="override [sim].seed")
    p_sweep.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalInvariantError as exc:
        print(f"numerical invariant breach: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
