"""Command-line experiment harness.

Subcommands:

* ``analyze``     closed-form success-ratio and throughput-gain curves -> CSV
* ``simulate``    multi-slot runs over a sweep grid -> metrics CSV, sample CSV, optional trace
* ``validate``    closed form vs single-slot Monte Carlo -> report CSV, nonzero exit on failure
* ``prioritize``  two-class countdown vs per-class static barring comparison -> CSV
* ``timing``      broadcast hearing-distance table -> CSV

Exit codes: 0 success, 1 validation or convergence failure, 2 bad
configuration or arguments.  Every output file starts with ``#`` metadata
lines carrying the tool version, the seed, and the fully resolved
configuration, so a result can be reproduced byte-for-byte from its own
header.  Flags override file values, which override defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from bccrsim import __version__
from bccrsim import config as config_mod
from bccrsim.analytics import (
    BccrConfig,
    ResourceModel,
    SlotLoad,
    analyze_slot,
    throughput_gain,
)
from bccrsim.barring import StaticBarring, static_schedule_probability
from bccrsim.config import ConfigError, ScenarioFile, SweepPoint
from bccrsim.oracle import validate_grid
from bccrsim.sim import HorizonExceeded, RunMetrics, Scenario, run as run_scenario
from bccrsim.timing import TimingConfig, max_hearing_distance

_SIM_COLUMNS = [
    "n_ues",
    "crs",
    "levels",
    "r_over_r3",
    "policy",
    "barring",
    "ue_class",
    "replications",
    "mean_service_time_s",
    "p99_service_time_s",
    "effective_throughput",
    "success_ratio",
    "ci95_halfwidth",
]


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _pos_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from exc


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc


def _write_csv(
    path: str,
    meta: dict[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for key, value in meta.items():
            handle.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _meta(command: str, seed: Optional[int], **extra: Any) -> dict[str, Any]:
    meta: dict[str, Any] = {"version": __version__, "command": command, "seed": seed}
    meta.update(extra)
    return meta


def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _run_all(scenarios: Sequence[Scenario], workers: int) -> list[RunMetrics]:
    if workers <= 1 or len(scenarios) <= 1:
        return [run_scenario(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, scenarios, chunksize=1))


def _t_halfwidth(values: np.ndarray) -> float:
    clean = values[~np.isnan(values)]
    if clean.size < 2:
        return 0.0
    spread = float(clean.std(ddof=1))
    return float(stats.t.ppf(0.975, clean.size - 1)) * spread / math.sqrt(clean.size)


def _nanmean(values: np.ndarray) -> float:
    return float(np.nanmean(values)) if not np.all(np.isnan(values)) else float("nan")


def _per_class_stats(
    runs: Sequence[RunMetrics], ue_class: str
) -> tuple[float, float, float, float, float]:
    """(mean, p99, throughput, success_ratio, ci95) aggregated over runs
    for one class name, with "all" meaning every UE."""
    means = np.empty(len(runs))
    p99s = np.empty(len(runs))
    throughputs = np.empty(len(runs))
    ratios = np.empty(len(runs))
    for i, metrics in enumerate(runs):
        if ue_class == "all":
            samples = metrics.samples
            population = metrics.ue_class.size
        else:
            samples = metrics.class_samples(ue_class)
            index = metrics.class_names.index(ue_class)
            population = int((metrics.ue_class == index).sum())
        if samples.size:
            means[i] = float(samples.mean())
            p99s[i] = float(np.percentile(samples, 99))
        else:
            means[i] = math.nan
            p99s[i] = math.nan
        throughputs[i] = samples.size / metrics.resources_spent
        ratios[i] = samples.size / population if population else math.nan
    return (
        _nanmean(means),
        _nanmean(p99s),
        _nanmean(throughputs),
        _nanmean(ratios),
        _t_halfwidth(means),
    )


# ---------------------------------------------------------------- analyze


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.n_min < 1 or args.n_max < args.n_min:
        raise ConfigError(f"bad n grid [{args.n_min}, {args.n_max}]")
    if any(k < 0 for k in args.crs):
        raise ConfigError("crs values must be >= 0")
    if any(r < 0 for r in args.r_over_r3):
        raise ConfigError("r_over_r3 values must be >= 0")
    resources = ResourceModel(msg1_cost=args.msg1_cost, msg3_cost=args.msg3_cost)

    rows: list[tuple[Any, ...]] = []
    for n in range(args.n_min, args.n_max + 1):
        load = SlotLoad(n=n, preambles=args.preambles)
        for k in args.crs:
            for ratio in args.r_over_r3:
                cfg = BccrConfig.from_crs_count(k, crs_cost=ratio * args.msg3_cost)
                breakdown = analyze_slot(load, cfg)
                rows.append(
                    (
                        n,
                        args.preambles,
                        k,
                        ratio,
                        breakdown.success_ratio_base,
                        breakdown.success_ratio_bccr,
                        throughput_gain(load, cfg, resources),
                    )
                )

    out = _out_dir(args.out)
    path = os.path.join(out, "analyze.csv")
    meta = _meta(
        "analyze",
        None,
        config={
            "n_min": args.n_min,
            "n_max": args.n_max,
            "preambles": args.preambles,
            "crs": list(args.crs),
            "r_over_r3": list(args.r_over_r3),
            "msg1_cost": args.msg1_cost,
            "msg3_cost": args.msg3_cost,
        },
    )
    _write_csv(
        path,
        meta,
        [
            "n",
            "preambles",
            "crs",
            "r_over_r3",
            "success_ratio_base",
            "success_ratio_bccr",
            "gain",
        ],
        rows,
    )
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------- validate


def cmd_validate(args: argparse.Namespace) -> int:
    if args.n_min < 1 or args.n_max < args.n_min or args.n_step < 1:
        raise ConfigError(
            f"bad n grid [{args.n_min}, {args.n_max}] step {args.n_step}"
        )
    if any(k < 0 for k in args.crs):
        raise ConfigError("crs values must be >= 0")
    ns = list(range(args.n_min, args.n_max + 1, args.n_step))
    reports = validate_grid(
        ns,
        args.crs,
        preambles=args.preambles,
        trials=args.trials,
        seed=args.seed,
        tolerance=args.tolerance,
        workers=args.workers,
    )

    rows = []
    failures = []
    for report in reports:
        verdict = "pass" if report.passed else "fail"
        rows.append(
            (
                report.load.n,
                report.load.preambles,
                (report.levels - 1).bit_length(),
                report.levels,
                report.trials,
                report.predicted_ratio,
                report.observed_ratio,
                report.stderr_ratio,
                report.error,
                report.tolerance,
                verdict,
            )
        )
        if not report.passed:
            failures.append(report)

    out = _out_dir(args.out)
    path = os.path.join(out, "validate.csv")
    meta = _meta(
        "validate",
        args.seed,
        config={
            "n_min": args.n_min,
            "n_max": args.n_max,
            "n_step": args.n_step,
            "preambles": args.preambles,
            "crs": list(args.crs),
            "trials": args.trials,
            "tolerance": args.tolerance,
        },
    )
    _write_csv(
        path,
        meta,
        [
            "n",
            "preambles",
            "crs",
            "levels",
            "trials",
            "predicted_ratio",
            "observed_ratio",
            "stderr_ratio",
            "abs_error",
            "tolerance",
            "verdict",
        ],
        rows,
    )
    passed = len(reports) - len(failures)
    print(f"wrote {path}")
    print(
        f"{passed}/{len(reports)} points within {args.tolerance}"
        f" (max error {max(r.error for r in reports):.5f})"
    )
    for report in failures[:10]:
        print(
            f"FAIL n={report.load.n} levels={report.levels}:"
            f" predicted {report.predicted_ratio:.5f}"
            f" observed {report.observed_ratio:.5f}"
            f" error {report.error:.5f}"
        )
    if len(failures) > 10:
        print(f"... and {len(failures) - 10} more failures")
    return 1 if failures else 0


# ---------------------------------------------------------------- timing


def cmd_timing(args: argparse.Namespace) -> int:
    rows = []
    for ratio in args.ratios:
        cfg = TimingConfig(
            t_crs=args.t_crs, broadcast_fraction=ratio, wave_speed=args.wave_speed
        )
        rows.append((args.t_crs, ratio, max_hearing_distance(cfg)))

    out = _out_dir(args.out)
    path = os.path.join(out, "timing.csv")
    meta = _meta(
        "timing",
        None,
        config={
            "t_crs": args.t_crs,
            "ratios": list(args.ratios),
            "wave_speed": args.wave_speed,
        },
    )
    _write_csv(
        path,
        meta,
        ["t_crs_s", "broadcast_fraction", "max_hearing_distance_m"],
        rows,
    )
    print(f"wrote {path}")
    for t_crs, ratio, distance in rows:
        print(f"fraction {ratio:.3f}: hearing distance {distance:.1f} m")
    return 0


# ---------------------------------------------------------------- simulate


def _resolve_common(
    args: argparse.Namespace, sf: ScenarioFile
) -> tuple[int, int, str]:
    seed = args.seed if args.seed is not None else sf.seed
    if seed is None:
        raise ConfigError("a seed is required: set `seed:` in the file or pass --seed")
    replications = (
        args.replications if args.replications is not None else sf.replications
    )
    out = args.out if args.out is not None else (sf.out_dir or "out")
    return seed, replications, out


def cmd_simulate(args: argparse.Namespace) -> int:
    sf = config_mod.load(args.config)
    seed, replications, out = _resolve_common(args, sf)
    trace_on = args.trace or sf.trace
    points = sf.sweep_points()

    scenarios = [
        sf.scenario(point, seed=seed, replicate_index=rep)
        for point in points
        for rep in range(replications)
    ]
    results = _run_all(scenarios, args.workers)

    class_names = [name for name, _ in sf.class_mix]
    row_classes = ["all"] + (class_names if len(class_names) > 1 else [])
    rows: list[tuple[Any, ...]] = []
    summaries: list[str] = []
    for index, point in enumerate(points):
        runs = results[index * replications : (index + 1) * replications]
        for ue_class in row_classes:
            mean, p99, throughput, ratio, ci95 = _per_class_stats(runs, ue_class)
            rows.append(
                (
                    point.n_ues,
                    point.crs,
                    point.levels,
                    point.r_over_r3,
                    point.policy,
                    sf.barring,
                    ue_class,
                    replications,
                    mean,
                    p99,
                    throughput,
                    ratio,
                    ci95,
                )
            )
            if ue_class == "all":
                summaries.append(
                    f"n_ues={point.n_ues} crs={point.crs}"
                    f" r_over_r3={point.r_over_r3} policy={point.policy}:"
                    f" mean={mean:.4f}s p99={p99:.4f}s throughput={throughput:.4f}"
                )

    resolved = sf.as_dict()
    resolved["seed"] = seed
    resolved["replications"] = replications
    resolved["trace"] = trace_on
    meta = _meta("simulate", seed, replications=replications, config=resolved)

    out = _out_dir(out)
    path = os.path.join(out, "simulate.csv")
    _write_csv(path, meta, _SIM_COLUMNS, rows)
    print(f"wrote {path} ({len(rows)} rows)")

    samples_path = os.path.join(out, "simulate_samples.csv")
    with open(samples_path, "w", encoding="utf-8", newline="") as handle:
        for key, value in meta.items():
            handle.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["n_ues", "crs", "r_over_r3", "policy", "replicate", "ue_class", "service_time_s"]
        )
        for index, point in enumerate(points):
            runs = results[index * replications : (index + 1) * replications]
            for rep, metrics in enumerate(runs):
                for ue in range(metrics.ue_class.size):
                    service = metrics.service_times[ue]
                    if math.isnan(service):
                        continue
                    writer.writerow(
                        (
                            point.n_ues,
                            point.crs,
                            point.r_over_r3,
                            point.policy,
                            rep,
                            metrics.class_names[metrics.ue_class[ue]],
                            float(service),
                        )
                    )
    print(f"wrote {samples_path}")

    if trace_on:
        trace_path = os.path.join(out, "simulate_trace.jsonl")
        with open(trace_path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
            for index, point in enumerate(points):
                runs = results[index * replications : (index + 1) * replications]
                for rep, metrics in enumerate(runs):
                    for event in metrics.trace:
                        handle.write(
                            json.dumps(
                                {
                                    "n_ues": point.n_ues,
                                    "crs": point.crs,
                                    "r_over_r3": point.r_over_r3,
                                    "policy": point.policy,
                                    "replicate": rep,
                                    "slot": event.slot,
                                    "contenders": event.contenders,
                                    "activated": event.activated,
                                    "successes": event.successes,
                                    "collisions": event.collisions,
                                },
                                sort_keys=True,
                            )
                            + "\n"
                        )
        print(f"wrote {trace_path}")

    for line in summaries:
        print(line)
    return 0


# ---------------------------------------------------------------- prioritize


def _mean_class_p99(runs: Sequence[RunMetrics], ue_class: str) -> float:
    values = []
    for metrics in runs:
        samples = metrics.class_samples(ue_class)
        values.append(float(np.percentile(samples, 99)) if samples.size else math.nan)
    return _nanmean(np.asarray(values))


def cmd_prioritize(args: argparse.Namespace) -> int:
    sf = config_mod.load(args.config)
    class_names = {name for name, _ in sf.class_mix}
    if class_names != {"prio", "nonprio"}:
        raise ConfigError(
            "prioritize needs a two-class scenario with classes prio and nonprio"
        )
    points = sf.sweep_points()
    if len(points) != 1:
        raise ConfigError("prioritize needs a single sweep point (no list axes)")
    base = points[0]
    if base.crs < 1:
        raise ConfigError("prioritize needs crs >= 1 for the countdown arm")
    point = SweepPoint(base.n_ues, base.crs, base.r_over_r3, "class-band")
    seed, replications, out = _resolve_common(args, sf)

    bccr_runs = _run_all(
        [sf.scenario(point, seed=seed, replicate_index=i) for i in range(replications)],
        args.workers,
    )
    target = _mean_class_p99(bccr_runs, "prio")

    mix = dict(sf.class_mix)
    n_prio = int(round(point.n_ues * mix["prio"]))
    cycle = sf.retry_cycle_slots()
    pb_prio = static_schedule_probability(n_prio, sf.preambles, cycle)
    flat = SweepPoint(point.n_ues, 0, point.r_over_r3, "uniform")

    def acb_arm(pb_nonprio: float) -> list[RunMetrics]:
        barring = StaticBarring({"prio": pb_prio, "nonprio": pb_nonprio})
        scenarios = [
            replace(
                sf.scenario(flat, seed=seed, replicate_index=i), barring=barring
            )
            for i in range(replications)
        ]
        return _run_all(scenarios, args.workers)

    # Raising the non-prio barring level withdraws interference, so the
    # prio 99%ile falls monotonically in pb.  Start the bracket at the
    # population-wide schedule; when the prio class is still faster than
    # the target there, keep doubling the non-prio admission rate until
    # the target is straddled, then bisect.
    lo = static_schedule_probability(point.n_ues, sf.preambles, cycle)
    hi = 0.99995
    cache: dict[float, list[RunMetrics]] = {}

    def prio_p99(pb: float) -> float:
        if pb not in cache:
            cache[pb] = acb_arm(pb)
        return _mean_class_p99(cache[pb], "prio")

    tolerance = args.match_tolerance
    matched = False
    iterations = 0
    g_lo = prio_p99(lo)
    g_hi = prio_p99(hi)
    expansions = 0
    while g_lo < target * (1.0 - tolerance) and lo > 0.0 and expansions < 6:
        expansions += 1
        lo = max(0.0, 1.0 - 2.0 * (1.0 - lo))
        g_lo = prio_p99(lo)
    if abs(g_lo - target) <= tolerance * target:
        pb_star, matched = lo, True
    elif abs(g_hi - target) <= tolerance * target:
        pb_star, matched = hi, True
    elif not (g_hi < target < g_lo):
        pb_star = lo if abs(g_lo - target) < abs(g_hi - target) else hi
    else:
        low, high = lo, hi
        pb_star = 0.5 * (low + high)
        while iterations < args.max_iterations:
            iterations += 1
            pb_star = 0.5 * (low + high)
            value = prio_p99(pb_star)
            if abs(value - target) <= tolerance * target:
                matched = True
                break
            if value > target:
                low = pb_star
            else:
                high = pb_star

    acb_runs = cache[pb_star]
    achieved = _mean_class_p99(acb_runs, "prio")

    rows = []
    arm_stats: dict[tuple[str, str], tuple[float, float, float, float, float]] = {}
    for scheme, runs in (("bccr", bccr_runs), ("acb", acb_runs)):
        for ue_class in ("prio", "nonprio"):
            cell = _per_class_stats(runs, ue_class)
            arm_stats[(scheme, ue_class)] = cell
            if scheme == "bccr":
                pb_cell = ""
            else:
                pb_cell = pb_prio if ue_class == "prio" else pb_star
            rows.append(
                (
                    scheme,
                    ue_class,
                    point.n_ues,
                    point.crs,
                    pb_cell,
                    cell[0],
                    cell[1],
                    cell[4],
                )
            )

    bccr_nonprio_mean = arm_stats[("bccr", "nonprio")][0]
    acb_nonprio_mean = arm_stats[("acb", "nonprio")][0]
    factor = acb_nonprio_mean / bccr_nonprio_mean if bccr_nonprio_mean else math.nan

    resolved = sf.as_dict()
    resolved["seed"] = seed
    resolved["replications"] = replications
    meta = _meta(
        "prioritize",
        seed,
        replications=replications,
        target_p99_s=target,
        matched_p99_s=achieved,
        matched=matched,
        iterations=iterations,
        pb_prio=pb_prio,
        pb_nonprio=pb_star,
        nonprio_mean_factor=factor,
        config=resolved,
    )
    out = _out_dir(out)
    path = os.path.join(out, "prioritize.csv")
    _write_csv(
        path,
        meta,
        [
            "scheme",
            "ue_class",
            "n_ues",
            "crs",
            "barring_probability",
            "mean_service_time_s",
            "p99_service_time_s",
            "ci95_halfwidth",
        ],
        rows,
    )
    print(f"wrote {path}")
    print(f"target prio p99 {target:.4f}s, matched {achieved:.4f}s after {iterations} iterations")
    print(
        f"non-prio mean service time: countdown {bccr_nonprio_mean:.4f}s,"
        f" barring {acb_nonprio_mean:.4f}s (factor {factor:.2f})"
    )
    if not matched:
        print("prio 99%ile match NOT reached; output reflects the closest point")
        return 1
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bccrsim",
        description="Random-access contention experiments: closed forms,"
        " slot oracle, and multi-slot simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="closed-form curves to CSV")
    analyze.add_argument("--out", default="out", help="output directory")
    analyze.add_argument("--n-min", type=_pos_int, default=2)
    analyze.add_argument("--n-max", type=_pos_int, default=195)
    analyze.add_argument("--preambles", type=_pos_int, default=30)
    analyze.add_argument("--crs", type=_int_list, default=(1, 2, 4), help="comma list of micro-slot counts")
    analyze.add_argument("--r-over-r3", dest="r_over_r3", type=_float_list, default=(0.04, 0.5), help="comma list of CRS cost ratios")
    analyze.add_argument("--msg1-cost", type=float, default=6.0)
    analyze.add_argument("--msg3-cost", type=float, default=2.0)
    analyze.set_defaults(func=cmd_analyze)

    validate = sub.add_parser("validate", help="closed form vs Monte Carlo oracle")
    validate.add_argument("--out", default="out")
    validate.add_argument("--seed", type=_nonneg_int, default=0)
    validate.add_argument("--n-min", type=_pos_int, default=2)
    validate.add_argument("--n-max", type=_pos_int, default=195)
    validate.add_argument("--n-step", type=_pos_int, default=1)
    validate.add_argument("--preambles", type=_pos_int, default=30)
    validate.add_argument("--crs", type=_int_list, default=(1, 2, 4))
    validate.add_argument("--trials", type=_pos_int, default=10**5)
    validate.add_argument("--tolerance", type=float, default=0.03)
    validate.add_argument("--workers", type=_pos_int, default=1)
    validate.set_defaults(func=cmd_validate)

    simulate = sub.add_parser("simulate", help="run a scenario file sweep")
    simulate.add_argument("--config", required=True, help="scenario file path")
    simulate.add_argument("--out", default=None)
    simulate.add_argument("--seed", type=_nonneg_int, default=None)
    simulate.add_argument("--replications", type=_pos_int, default=None)
    simulate.add_argument("--workers", type=_pos_int, default=1)
    simulate.add_argument("--trace", action="store_true", help="write per-slot trace JSONL")
    simulate.set_defaults(func=cmd_simulate)

    prioritize = sub.add_parser("prioritize", help="countdown vs static class barring")
    prioritize.add_argument("--config", required=True)
    prioritize.add_argument("--out", default=None)
    prioritize.add_argument("--seed", type=_nonneg_int, default=None)
    prioritize.add_argument("--replications", type=_pos_int, default=None)
    prioritize.add_argument("--workers", type=_pos_int, default=1)
    prioritize.add_argument("--match-tolerance", type=float, default=0.02)
    prioritize.add_argument("--max-iterations", type=_pos_int, default=30)
    prioritize.set_defaults(func=cmd_prioritize)

    timing = sub.add_parser("timing", help="hearing-distance table")
    timing.add_argument("--out", default="out")
    timing.add_argument("--t-crs", type=float, default=66.67e-6, help="micro-slot duration, seconds")
    timing.add_argument("--ratios", type=_float_list, default=(0.8, 0.9, 1.0), help="comma list of broadcast fractions")
    timing.add_argument("--wave-speed", type=float, default=2.998e8)
    timing.set_defaults(func=cmd_timing)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HorizonExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
