"""Command line interface: outputs, determinism, exit codes."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import pytest

from bccrsim import cli
from bccrsim.analytics import BccrConfig, ResourceModel, SlotLoad, throughput_gain


def _read_output(path: Path) -> tuple[dict, list[str], list[list[str]]]:
    meta: dict = {}
    body: list[str] = []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, payload = line[2:].partition(": ")
            meta[key] = json.loads(payload)
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def _write_config(tmp_path: Path, text: str, name: str = "scenario.yaml") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_analyze_writes_the_curve_table(tmp_path) -> None:
    out = tmp_path / "a"
    code = cli.main(
        [
            "analyze",
            "--out",
            str(out),
            "--n-min",
            "2",
            "--n-max",
            "10",
            "--crs",
            "1,2",
            "--r-over-r3",
            "0.04",
        ]
    )
    assert code == 0
    meta, header, rows = _read_output(out / "analyze.csv")
    assert header == [
        "n",
        "preambles",
        "crs",
        "r_over_r3",
        "success_ratio_base",
        "success_ratio_bccr",
        "gain",
    ]
    assert len(rows) == 9 * 2
    assert meta["command"] == "analyze"
    assert meta["config"]["crs"] == [1, 2]
    # spot-check one row against the closed form
    row = next(r for r in rows if r[0] == "5" and r[2] == "2")
    cfg = BccrConfig.from_crs_count(2, crs_cost=0.04 * 2.0)
    expected = throughput_gain(SlotLoad(5, 30), cfg, ResourceModel())
    assert float(row[6]) == pytest.approx(expected, rel=1e-12)


def test_analyze_is_byte_identical_across_reruns(tmp_path) -> None:
    args = ["analyze", "--n-min", "2", "--n-max", "6", "--crs", "1"]
    assert cli.main(args + ["--out", str(tmp_path / "one")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "two")]) == 0
    first = (tmp_path / "one" / "analyze.csv").read_bytes()
    second = (tmp_path / "two" / "analyze.csv").read_bytes()
    assert first == second


def test_analyze_rejects_a_bad_grid(tmp_path) -> None:
    assert (
        cli.main(["analyze", "--out", str(tmp_path), "--n-min", "9", "--n-max", "3"])
        == 2
    )


def test_validate_small_grid_passes(tmp_path) -> None:
    code = cli.main(
        [
            "validate",
            "--out",
            str(tmp_path),
            "--n-min",
            "5",
            "--n-max",
            "15",
            "--n-step",
            "5",
            "--crs",
            "0,1",
            "--trials",
            "3000",
            "--seed",
            "1",
        ]
    )
    assert code == 0
    meta, header, rows = _read_output(tmp_path / "validate.csv")
    assert header == [
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
    ]
    assert len(rows) == 6
    assert all(r[-1] == "pass" for r in rows)
    assert meta["seed"] == 1


def test_validate_flags_an_unreachable_tolerance(tmp_path) -> None:
    code = cli.main(
        [
            "validate",
            "--out",
            str(tmp_path),
            "--n-min",
            "50",
            "--n-max",
            "50",
            "--crs",
            "1",
            "--trials",
            "3000",
            "--tolerance",
            "0.0001",
            "--seed",
            "1",
        ]
    )
    assert code == 1
    _, _, rows = _read_output(tmp_path / "validate.csv")
    assert rows[0][-1] == "fail"


def test_validate_reruns_are_byte_identical(tmp_path) -> None:
    args = [
        "validate",
        "--n-min",
        "10",
        "--n-max",
        "10",
        "--crs",
        "1",
        "--trials",
        "500",
        "--seed",
        "3",
    ]
    assert cli.main(args + ["--out", str(tmp_path / "one")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "two")]) == 0
    assert (tmp_path / "one" / "validate.csv").read_bytes() == (
        tmp_path / "two" / "validate.csv"
    ).read_bytes()


def test_timing_table_contains_the_reference_distance(tmp_path) -> None:
    assert cli.main(["timing", "--out", str(tmp_path)]) == 0
    meta, header, rows = _read_output(tmp_path / "timing.csv")
    assert header == ["t_crs_s", "broadcast_fraction", "max_hearing_distance_m"]
    by_fraction = {float(r[1]): float(r[2]) for r in rows}
    assert by_fraction[0.9] == pytest.approx(999.3833, abs=1e-9)
    assert by_fraction[0.8] == pytest.approx(1998.7666, abs=1e-9)
    assert by_fraction[1.0] == 0.0
    assert meta["config"]["wave_speed"] == 2.998e8


def test_simulate_sweep_outputs(tmp_path) -> None:
    config = _write_config(
        tmp_path,
        "n_ues: 40\ncrs: [0, 1]\nseed: 9\nreplications: 2\n",
    )
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", config, "--out", str(out)]) == 0
    meta, header, rows = _read_output(out / "simulate.csv")
    assert header == [
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
    # one "all" row per sweep point for the single-class mix
    assert [(r[0], r[1], r[6]) for r in rows] == [
        ("40", "0", "all"),
        ("40", "1", "all"),
    ]
    for row in rows:
        assert float(row[8]) > 0
        assert float(row[11]) == 1.0
    assert meta["command"] == "simulate"
    assert meta["replications"] == 2
    assert meta["config"]["n_ues"] == [40]

    samples_meta, samples_header, samples_rows = _read_output(
        out / "simulate_samples.csv"
    )
    assert samples_header == [
        "n_ues",
        "crs",
        "r_over_r3",
        "policy",
        "replicate",
        "ue_class",
        "service_time_s",
    ]
    # every UE connected in every run of both sweep cells
    assert len(samples_rows) == 40 * 2 * 2
    assert samples_meta["seed"] == meta["seed"] == 9


def test_simulate_reruns_are_byte_identical(tmp_path) -> None:
    config = _write_config(tmp_path, "n_ues: 30\nseed: 4\nreplications: 2\n")
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "one")]) == 0
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "two")]) == 0
    for name in ("simulate.csv", "simulate_samples.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (
            tmp_path / "two" / name
        ).read_bytes()


def test_simulate_seed_override_changes_the_outcome(tmp_path) -> None:
    config = _write_config(tmp_path, "n_ues: 30\nseed: 4\nreplications: 2\n")
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path / "one")]) == 0
    assert (
        cli.main(
            [
                "simulate",
                "--config",
                config,
                "--out",
                str(tmp_path / "two"),
                "--seed",
                "5",
            ]
        )
        == 0
    )
    one_meta, _, one_rows = _read_output(tmp_path / "one" / "simulate.csv")
    two_meta, _, two_rows = _read_output(tmp_path / "two" / "simulate.csv")
    assert one_meta["seed"] == 4 and two_meta["seed"] == 5
    assert one_rows != two_rows


def test_simulate_trace_jsonl(tmp_path) -> None:
    config = _write_config(
        tmp_path, "n_ues: 20\nseed: 2\nreplications: 1\ntrace: true\n"
    )
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", config, "--out", str(out)]) == 0
    lines = (out / "simulate_trace.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["meta"]["command"] == "simulate"
    records = [json.loads(line) for line in lines[1:]]
    assert records
    assert {"slot", "contenders", "activated", "successes", "collisions"} <= set(
        records[0]
    )
    # the trace accounts for every connection: 20 UEs, nobody dropped
    assert sum(r["successes"] for r in records) == 20


def test_simulate_requires_a_seed(tmp_path) -> None:
    config = _write_config(tmp_path, "n_ues: 10\n")
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path)]) == 2


def test_simulate_rejects_bad_config_files(tmp_path) -> None:
    bad = _write_config(tmp_path, "n_ues: 10\nmsg2_cost: 1\n")
    assert cli.main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 2
    missing = str(tmp_path / "nope.yaml")
    assert cli.main(["simulate", "--config", missing, "--out", str(tmp_path)]) == 2


def test_simulate_horizon_exhaustion_is_exit_one(tmp_path) -> None:
    config = _write_config(
        tmp_path, "n_ues: 500\nseed: 1\nreplications: 1\nhorizon_slots: 5\n"
    )
    assert cli.main(["simulate", "--config", config, "--out", str(tmp_path)]) == 1


def test_prioritize_trivial_load_matches_immediately(tmp_path) -> None:
    config = _write_config(
        tmp_path,
        "n_ues: 8\n"
        "crs: 2\n"
        "class_mix: {prio: 0.5, nonprio: 0.5}\n"
        "seed: 3\n"
        "replications: 3\n",
    )
    out = tmp_path / "out"
    assert cli.main(["prioritize", "--config", config, "--out", str(out)]) == 0
    meta, header, rows = _read_output(out / "prioritize.csv")
    assert header == [
        "scheme",
        "ue_class",
        "n_ues",
        "crs",
        "barring_probability",
        "mean_service_time_s",
        "p99_service_time_s",
        "ci95_halfwidth",
    ]
    assert {(r[0], r[1]) for r in rows} == {
        ("bccr", "prio"),
        ("bccr", "nonprio"),
        ("acb", "prio"),
        ("acb", "nonprio"),
    }
    assert meta["matched"] is True
    # eight UEs never collide at these seeds: both arms run unbarred and
    # the match is immediate
    assert meta["pb_prio"] == 0.0
    assert meta["pb_nonprio"] == 0.0
    assert meta["iterations"] == 0
    assert meta["target_p99_s"] == pytest.approx(0.02967073513173051, rel=1e-12)
    assert meta["matched_p99_s"] == pytest.approx(meta["target_p99_s"], rel=0.02)
    assert meta["nonprio_mean_factor"] == pytest.approx(1.0, abs=0.05)


def test_prioritize_needs_the_two_class_mix(tmp_path) -> None:
    config = _write_config(tmp_path, "n_ues: 8\ncrs: 2\nseed: 3\n")
    assert cli.main(["prioritize", "--config", config, "--out", str(tmp_path)]) == 2


def test_prioritize_needs_a_single_point_and_a_countdown(tmp_path) -> None:
    swept = _write_config(
        tmp_path,
        "n_ues: [8, 16]\ncrs: 2\nclass_mix: {prio: 0.5, nonprio: 0.5}\nseed: 3\n",
        name="swept.yaml",
    )
    assert cli.main(["prioritize", "--config", swept, "--out", str(tmp_path)]) == 2
    flat = _write_config(
        tmp_path,
        "n_ues: 8\nclass_mix: {prio: 0.5, nonprio: 0.5}\nseed: 3\n",
        name="flat.yaml",
    )
    assert cli.main(["prioritize", "--config", flat, "--out", str(tmp_path)]) == 2
