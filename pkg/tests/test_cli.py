import csv
import json
import subprocess
import sys

import pytest

from bhnoma.cli import SCHEMAS, main, parse_range
from bhnoma.scenario import ScenarioConfig, dump_scenario

TINY = ScenarioConfig(beam_count=4, max_active_beams=2, window_slots=3, users_per_beam=4,
                      subcarriers_per_beam=2, max_carriers_per_user=1)


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "tiny.scn"
    path.write_text(dump_scenario(TINY))
    return path


def _rows(path):
    body = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.reader(body))


def test_optimize_writes_a_checkable_report(scenario, tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main(["optimize", "--scenario", str(scenario), "--seed", "3", "--out", str(out)])
    assert code in (0, 2)
    data = json.loads(out.read_text())
    assert data["seed"] == 3 and data["scheduler"] == "unoma"
    assert "wall_clock" not in data
    assert main(["--check", str(out)]) == 0
    assert "ok" in capsys.readouterr().out


@pytest.mark.parametrize("scheduler", ["unoma", "oma", "maxsinr", "periodic"])
def test_optimize_reruns_are_byte_identical(scenario, tmp_path, scheduler):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        main(["optimize", "--scenario", str(scenario), "--scheduler", scheduler, "--seed", "5",
              "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_infeasible_instance_exits_with_two(tmp_path):
    path = tmp_path / "hard.scn"
    path.write_text(dump_scenario(TINY.replace(min_rate=1e15)))
    assert main(["optimize", "--scenario", str(path), "--out", str(tmp_path / "r.json")]) == 2


def test_invalid_scenario_exits_with_one(tmp_path, capsys):
    path = tmp_path / "bad.scn"
    path.write_text("beam_count = 4\nmax_active_beams = 9\n")
    assert main(["optimize", "--scenario", str(path)]) == 1
    assert "B0 <= B" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["outage", "--snr-range", "10:0:2"],
    ["outage", "--snr-range", "a:b"],
    ["outage", "--power", "0.3"],
    ["pavg", "--kappa", "1.5"],
    ["pavg", "--trials", "0"],
    ["compare", "--seeds", "0"],
    ["compare", "--schedulers", "unoma,fastest"],
    [],
])
def test_bad_input_exits_with_one(argv):
    assert main(argv) == 1


def test_seed_from_environment(monkeypatch, scenario, tmp_path):
    monkeypatch.setenv("BHNOMA_SEED", "oops")
    assert main(["pavg", "--trials", "10", "--out", str(tmp_path / "p.csv")]) == 1
    monkeypatch.setenv("BHNOMA_SEED", "8")
    assert main(["pavg", "--trials", "10", "--out", str(tmp_path / "p.csv")]) == 0
    assert "seed=8" in (tmp_path / "p.csv").read_text().splitlines()[0]


def test_range_parser_includes_the_end():
    assert list(parse_range("0:40:2", "x")) == [float(v) for v in range(0, 41, 2)]
    assert list(parse_range("1:1:1", "x")) == [1.0]


def test_outage_sweep_has_one_row_per_point(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["outage", "--snr-range", "0:40:2", "--pavg-trials", "2000", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == SCHEMAS["outage"]
    assert len(rows) == 22
    assert all(r[7] == "" for r in rows[1:])
    assert main(["--check", str(out)]) == 0


def test_outage_with_trials_is_identical_across_workers(tmp_path):
    outs = []
    for workers in ("1", "3"):
        out = tmp_path / f"o{workers}.csv"
        assert main(["outage", "--snr-range", "0:20:10", "--user", "both", "--trials", "70000",
                     "--pavg-trials", "2000", "--seed", "2", "--workers", workers, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(_rows(tmp_path / "o1.csv")) == 7


def test_pavg_weights_sum_to_one(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["pavg", "--kappa", "0.6", "--trials", "5000", "--out", str(out)]) == 0
    rows = _rows(out)[1:]
    assert sum(float(r[1]) for r in rows) == pytest.approx(1.0, abs=1e-12)
    assert main(["--check", str(out)]) == 0


def test_compare_is_identical_across_workers(scenario, tmp_path):
    outs = []
    for workers in ("1", "2"):
        out = tmp_path / f"c{workers}.csv"
        assert main(["compare", "--scenario", str(scenario), "--demand-sweep", "300:400:100", "--seeds", "2",
                     "--workers", workers, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rows = _rows(tmp_path / "c1.csv")
    assert rows[0] == SCHEMAS["compare"] and len(rows) == 9
    for level in ("300.0", "400.0"):
        assert sorted(int(r[5]) for r in rows[1:] if r[0] == level) == [1, 2, 3, 4]


def test_check_flags_tampered_files(tmp_path, capsys):
    out = tmp_path / "p.csv"
    main(["pavg", "--trials", "1000", "--out", str(out)])
    lines = out.read_text().splitlines()
    lines[2] = lines[2].replace(lines[2].split(",")[1], "0.5", 1)
    out.write_text("\n".join(lines) + "\n")
    assert main(["--check", str(out)]) == 1
    (tmp_path / "x.json").write_text('{"seed": 1}')
    assert main(["--check", str(tmp_path / "x.json")]) == 1
    assert main(["--check", str(tmp_path / "missing.csv")]) == 1


def test_module_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "bhnoma.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("bhnoma ")
