import csv
import json

import pytest

from noma_v2i.cli import main
from noma_v2i.scenario import reference_scenario, placement_scenario, save_config

from .conftest import CONFIG_DIR

SINGLE = str(CONFIG_DIR / "single_placement.json")


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert main(["solve", "--config", SINGLE, "--out", str(out)]) == 0
    return out


def test_solve_outputs(solved):
    summary = json.loads((solved / "summary.json").read_text())
    assert summary["feasible"] is True
    assert summary["outage_prob"] <= 0.1
    assert summary["lambda_star"] > 0
    assert len(_rows(solved / "policy.csv")) == 43
    trace = _rows(solved / "trace.csv")
    assert list(trace[0]) == ["lambda", "outage", "capacity", "dual_value"]


def test_solve_is_byte_stable(solved, tmp_path):
    assert main(["solve", "--config", SINGLE, "--out", str(tmp_path)]) == 0
    for name in ("policy.csv", "trace.csv", "summary.json"):
        assert (tmp_path / name).read_bytes() == (solved / name).read_bytes()


def test_solve_slack_constraint(tmp_path):
    save_config(reference_scenario(delta=1.0), tmp_path / "c.json")
    assert main(["solve", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "summary.json").read_text())["lambda_star"] == 0.0


def test_solve_infeasible_exit_code(tmp_path):
    save_config(reference_scenario(delta=0.0), tmp_path / "c.json")
    assert main(["solve", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 2
    assert json.loads((tmp_path / "summary.json").read_text())["feasible"] is False


def test_bad_config_path(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["sweep-lambda", "--config", SINGLE, "--filter", "sideways"])
    assert exc.value.code == 1


def test_sweep_lambda(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-lambda", "--config", SINGLE, "--lambda-grid", "0,1,5,40,200",
                 "--out", str(out)]) == 0
    rows = _rows(out)
    assert list(rows[0]) == ["filter", "lambda", "return", "outage", "capacity"]
    assert [r["filter"] for r in rows] == ["full"] * 5 + ["order12"] * 5 + ["order21"] * 5
    by = {(r["filter"], float(r["lambda"])): r for r in rows}
    zero = by["full", 0.0]
    assert float(zero["return"]) == pytest.approx(float(zero["capacity"]), rel=1e-12)
    for lam in (0.0, 1.0, 5.0, 40.0, 200.0):
        for f in ("order12", "order21"):
            assert float(by["full", lam]["return"]) >= float(by[f, lam]["return"]) - 1e-12


def test_sweep_lambda_default_grid(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-lambda", "--config", SINGLE, "--filter", "full", "--out", str(out)]) == 0
    rows = _rows(out)
    # 20 grid points plus the search's lambda*
    assert len(rows) == 21
    assert float(rows[-1]["lambda"]) == pytest.approx(4 * 4 * 1024)


def test_delta_sweep_single_realization(tmp_path):
    save_config(placement_scenario(), tmp_path / "t.json")
    out = tmp_path / "d.csv"
    assert main(["delta-sweep", "--config", str(tmp_path / "t.json"), "--delta-grid", "0.1",
                 "--realizations", "1", "--seed", "3", "--out", str(out)]) == 0
    rows = _rows(out)
    assert [r["filter"] for r in rows] == ["full", "order12", "order21"]
    assert list(rows[0]) == ["filter", "delta", "mean_capacity", "feasible", "infeasible"]
    assert all(int(r["feasible"]) + int(r["infeasible"]) == 1 for r in rows)


def test_simulate(solved, tmp_path):
    summary = json.loads((solved / "summary.json").read_text())
    out = tmp_path / "mc.json"
    assert main(["simulate", "--config", SINGLE, "--policy", str(solved / "policy.csv"),
                 "--lambda", str(summary["lambda_star"]), "--episodes", "100000",
                 "--seed", "9", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert abs(report["mc_return"] - report["exact_return"]) <= 3 * report["mc_return_se"]
    assert report["exact_outage"] == pytest.approx(summary["outage_prob"], abs=1e-15)


def test_simulate_argument_and_policy_errors(solved, tmp_path, capsys):
    policy = solved / "policy.csv"
    assert main(["simulate", "--config", SINGLE, "--policy", str(policy), "--episodes", "0"]) == 1
    lines = policy.read_text().splitlines()
    broken = tmp_path / "broken.csv"
    broken.write_text("\n".join(l for l in lines if not l.startswith("3,7,")) + "\n")
    assert main(["simulate", "--config", SINGLE, "--policy", str(broken)]) == 1
    assert "(E=3, Z=7)" in capsys.readouterr().err


def test_table_dump(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["table", "--config", SINGLE, "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 400
    assert rows[0]["order"] == "O12" and rows[-1]["order"] == "O21"
