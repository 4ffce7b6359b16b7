import json

import pandas as pd
import pytest

from benchmark import PER_SLOT_COLUMNS, REPORT_COLUMNS, ComparisonRunner, verify_instance, verify_random
from instance_io import load_instance, save_instance
from main import main
from offline_solver import solve_offline
from workload import generate_instance


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "instance.json"
    assert main(["gen", "--T", "12", "--d", "2", "--m", "3", "--seed", "5", "--out", str(path)]) == 0
    return path


@pytest.fixture
def time_dependent_file(tmp_path):
    path = tmp_path / "priced.json"
    save_instance(generate_instance(T=8, d=2, m=2, seed=4, time_dependent=True), path)
    return path


# ----------------------------------------------------------------------
# Comparison runner
# ----------------------------------------------------------------------

def test_comparison_runner_covers_every_solver(two_type_instance):
    runner = ComparisonRunner(two_type_instance, epsilons=[0.5, 1.0])
    reports = runner.run()
    assert [r.algorithm for r in reports] == ["exact", "approx", "approx", "A", "B", "C", "C"]
    assert [r.run_id for r in reports] == list(range(1, 8))
    assert reports[0].ratio == pytest.approx(1.0)
    assert not any(r.violation for r in reports)

    frame = runner.report_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    slots = runner.per_slot_frame()
    assert list(slots.columns) == PER_SLOT_COLUMNS
    assert len(slots) == len(reports) * two_type_instance.T * two_type_instance.d


def test_comparison_runner_skips_online_for_varying_fleet():
    instance = generate_instance(T=6, d=2, m=2, seed=3, varying_fleet=True)
    reports = ComparisonRunner(instance, epsilons=[0.5]).run()
    assert [r.algorithm for r in reports] == ["exact", "approx"]


def test_timing_column(two_type_instance):
    runner = ComparisonRunner(two_type_instance, epsilons=[1.0], timing=True)
    runner.run()
    assert list(runner.report_frame().columns) == REPORT_COLUMNS + ["wall_time"]


def test_verify_helpers(two_type_instance):
    small = two_type_instance.prefix(3)
    summary = verify_instance(small)
    assert summary.passed, str(summary)
    assert summary.checks == 1 + 3 * 12

    summary = verify_random(10, seed=3)
    assert summary.instances == 10 and summary.passed, str(summary)


# ----------------------------------------------------------------------
# Command line
# ----------------------------------------------------------------------

def test_gen_is_deterministic(tmp_path, instance_file):
    again = tmp_path / "again.json"
    assert main(["gen", "--T", "12", "--d", "2", "--m", "3", "--seed", "5", "--out", str(again)]) == 0
    assert again.read_bytes() == instance_file.read_bytes()
    assert json.loads(again.read_text())["T"] == 12


def test_gen_to_stdout(capsys):
    assert main(["gen", "--T", "3", "--d", "1", "--m", "1", "--seed", "1", "--profile", "constant"]) == 0
    assert json.loads(capsys.readouterr().out)["d"] == 1


def test_validate(instance_file, tmp_path, capsys):
    assert main(["validate", str(instance_file)]) == 0
    assert "ok" in capsys.readouterr().out

    document = json.loads(instance_file.read_text())
    document["lambda"][0] = 1000.0
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(document))
    assert main(["validate", str(broken)]) == 1
    assert "slot 1 infeasible" in capsys.readouterr().out

    garbage = tmp_path / "garbage.json"
    garbage.write_text("{}")
    assert main(["validate", str(garbage)]) == 1


def test_solve_prints_schedule(instance_file, capsys):
    assert main(["solve", str(instance_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,x_1,x_2,operating,switching"
    assert len(lines) == 13

    assert main(["solve", str(instance_file), "--cost-only"]) == 0
    cost = float(capsys.readouterr().out)
    assert cost == pytest.approx(solve_offline(load_instance(instance_file)).cost, rel=1e-9)


def test_approx_and_online_commands(instance_file, tmp_path, capsys):
    out = tmp_path / "approx.csv"
    assert main(["approx", str(instance_file), "--epsilon", "0.5", "--audit", "--out", str(out)]) == 0
    assert len(pd.read_csv(out)) == 12

    assert main(["online", str(instance_file), "--alg", "b", "--audit"]) == 0
    text = capsys.readouterr().out
    schedule, audit = text.split("\n\n")
    assert schedule.splitlines()[0] == "t,x_1,x_2,operating,switching"
    header, row = audit.strip().splitlines()
    assert header == "algorithm,epsilon,total,opt,ratio,bound,violation"
    assert row.startswith("B,,") and row.endswith(",0")

    assert main(["online", str(instance_file), "--alg", "c", "--epsilon", "0.5"]) == 0


def test_exit_codes(instance_file, time_dependent_file):
    assert main(["online", str(time_dependent_file), "--alg", "a"]) == 2
    assert main(["online", str(instance_file), "--alg", "c"]) == 2
    assert main(["compare", str(instance_file), "--epsilons", "a,b"]) == 2
    assert main(["compare", str(instance_file), "--epsilons", "0.5,-1"]) == 2
    assert main(["verify"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["approx", str(instance_file), "--epsilon", "0.5", "--gamma", "2"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["online", str(instance_file), "--alg", "z"])
    assert info.value.code == 2


def test_verify_command(capsys):
    assert main(["verify", "--random", "200", "--seed", "7"]) == 0
    assert "passed" in capsys.readouterr().out


def test_compare_writes_reports(instance_file, tmp_path):
    report, slots = tmp_path / "report.csv", tmp_path / "slots.csv"
    arguments = ["compare", str(instance_file), "--out", str(report), "--per-slot-out", str(slots),
                 "--epsilons", "0.5,1"]
    assert main(arguments) == 0
    first = report.read_bytes()

    frame = pd.read_csv(report)
    assert list(frame.columns) == REPORT_COLUMNS
    assert list(frame["algorithm"]) == ["exact", "approx", "approx", "A", "B", "C", "C"]
    assert (frame["violation"] == 0).all()
    assert list(pd.read_csv(slots).columns) == PER_SLOT_COLUMNS

    assert main(arguments) == 0
    assert report.read_bytes() == first


def test_bursty_trace_is_byte_identical(tmp_path):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    for path in paths:
        arguments = ["gen", "--T", "14", "--d", "1", "--m", "3", "--seed", "7", "--profile", "bursty"]
        assert main(arguments + ["--out", str(path)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_online_audit_for_algorithm_a(instance_file, capsys):
    assert main(["online", str(instance_file), "--alg", "a", "--audit"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert row[0] == "A"
    ratio, bound = float(row[4]), float(row[5])
    assert bound == 5.0
    assert 1.0 - 1e-9 <= ratio <= bound
