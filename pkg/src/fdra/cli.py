"""Command-line entry point: ``fdra sweep`` and ``fdra single``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .channel import ConfigError, load_scenario, save_scenario, watts_to_dbm
from .dual_opt import DualOptions
from .experiment import (
    SCHEMES,
    SCHEME_ALIASES,
    canonical_scheme,
    exhaustive_skip_reason,
    load_config,
    run_scheme,
    run_sweep,
    scenario_for,
)
from .model import ScenarioError, check_budgets, downlink_rate, uplink_rate


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdra",
        description="Full-duplex OFDMA 3D mapping and power allocation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    names = list(SCHEMES) + list(SCHEME_ALIASES)

    sweep = sub.add_parser("sweep", help="run a BS power sweep and write per-trial CSV rows")
    sweep.add_argument("--config", required=True, help="experiment JSON config")
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--scheme", choices=names, help="run only this scheme")
    sweep.add_argument("--seed", type=_u64, help="override sweep.base_seed")
    sweep.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    sweep.add_argument("--quiet", action="store_true", help="suppress progress output")

    single = sub.add_parser("single", help="solve one scenario and print a report")
    single.add_argument("--config", required=True, help="experiment JSON config")
    single.add_argument("--scheme", choices=names, default="proposed_joint")
    single.add_argument("--seed", type=_u64, help="trial seed (default: sweep.base_seed)")
    single.add_argument("--pb-dbm", type=float, help="BS budget in dBm (default: first sweep point)")
    single.add_argument("--mapping", choices=("heuristic", "exhaustive"), help="override dual.mapping_mode")
    single.add_argument("--scenario", help="load the scenario from this JSON file instead of generating it")
    single.add_argument("--save-scenario", help="write the scenario used to this JSON file")
    single.add_argument("--quiet", action="store_true", help="print only the sum rate")
    return parser


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        print(f"\r{done}/{total} trials", end="\n" if done == total else "", file=sys.stderr, flush=True)


def cmd_sweep(args) -> int:
    rows = run_sweep(
        args.config,
        args.out,
        scheme=args.scheme,
        seed=args.seed,
        timing=args.timing,
        progress=None if args.quiet else _progress,
    )
    if not args.quiet:
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def format_report(scheme: str, scenario, result) -> str:
    lines = []
    m, n, k = scenario.shape
    lines.append(f"scheme: {scheme}")
    lines.append(
        f"scenario: {m} UUE, {n} DUE, {k} subchannels; "
        f"P_b = {scenario.p_bs_max:.6g} W ({watts_to_dbm(scenario.p_bs_max):.2f} dBm)"
    )
    lines.append("")
    lines.append(f"{'uue':>4} {'due':>4} {'sub':>4} {'p_up [W]':>12} {'p_down [W]':>12} "
                 f"{'up [b/s/Hz]':>12} {'down [b/s/Hz]':>14}")
    for t in result.assignment:
        p = result.powers[t]
        up = uplink_rate(p.p_up, scenario.gain_up[t[0], t[2]], scenario.sigma_si_sq, scenario.sigma_bs_sq)
        down = downlink_rate(p.p_down, p.p_up, scenario.gain_down[t[1], t[2]],
                             scenario.gain_cross[t], scenario.sigma_due_sq)
        lines.append(f"{t[0]:>4} {t[1]:>4} {t[2]:>4} {p.p_up:>12.6g} {p.p_down:>12.6g} "
                     f"{up:>12.6f} {down:>14.6f}")
    lines.append("")
    lines.append(f"sum rate: {result.sum_rate!r} bits/s/Hz over {len(result.assignment)} triples")
    report = check_budgets(scenario, result.assignment, result.powers)
    lines.append(
        f"BS budget: {report.bs.consumed:.6g} / {report.bs.budget:.6g} W"
        + ("" if report.bs.satisfied else "  EXCEEDED")
    )
    for i, usage in enumerate(report.uue):
        lines.append(
            f"UUE {i} budget: {usage.consumed:.6g} / {usage.budget:.6g} W"
            + ("" if usage.satisfied else "  EXCEEDED")
        )
    d = result.diagnostics
    if d.iterations:
        lines.append(
            f"dual: {d.iterations} iterations, converged={d.converged}, "
            f"bound={d.dual_value:.6f}, gap={d.dual_gap:.6f}, time={d.wall_time_s:.3f} s"
        )
    return "\n".join(lines)


def cmd_single(args) -> int:
    config = load_config(args.config)
    scheme = canonical_scheme(args.scheme)
    dual: DualOptions = config.dual
    if args.mapping:
        dual = replace(dual, mapping_mode=args.mapping)
    seed = args.seed if args.seed is not None else config.sweep.base_seed
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        pb = args.pb_dbm if args.pb_dbm is not None else config.sweep.pb_dbm[0]
        scenario = scenario_for(config, pb, seed)
    if args.save_scenario:
        save_scenario(scenario, args.save_scenario)
    if scheme == "exhaustive":
        reason = exhaustive_skip_reason(scenario.shape)
        if reason:
            raise ConfigError(f"scheme: exhaustive {reason}")
    result = run_scheme(scheme, scenario, seed, dual)
    if args.quiet:
        print(repr(result.sum_rate))
    else:
        print(format_report(scheme, scenario, result))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_single(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
