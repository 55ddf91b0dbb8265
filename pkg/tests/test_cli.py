import json

import pytest

from hrlcampaign import cli
from hrlcampaign.milp import solve_milp
from hrlcampaign.netmodel import load_scenario
from hrlcampaign.scheduler import CampaignState, DesignGrid, assemble_mission
from hrlcampaign.campaign import compute_baseline

TRAIN = ["--grid", "3", "3", "--preset", "desk", "--episodes", "3", "--n1", "1", "--n2", "1",
         "--batch-size", "4", "--seed", "5"]


def run(argv, capsys):
    rc = cli.main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_validate_shipped_scenario(tmp_path, capsys):
    rc, out, err = run(["validate", "A", "--out", str(tmp_path)], capsys)
    assert rc == 0 and out.startswith("ok:")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "validate"
    assert manifest["scenario_digest"] == load_scenario("A").digest()


@pytest.mark.parametrize("argv", [
    ["validate", "no_such_scenario.yaml"],
    ["validate", "A", "--bogus"],
    ["frobnicate"],
    ["solve", "missing.lp"],
    ["export", "desk", "--mission", "9"],
])
def test_errors_are_single_line_with_usage_code(argv, tmp_path, capsys):
    rc, out, err = run(argv + ["--out", str(tmp_path)], capsys)
    assert rc == 2
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error: ")


def test_malformed_lp_file(tmp_path, capsys):
    bad = tmp_path / "bad.lp"
    bad.write_text("Minimize\n obj: x +\nSubject To\n c1: x >= \nEnd\n")
    rc, _, err = run(["solve", str(bad), "--out", str(tmp_path)], capsys)
    assert rc == 2 and "LpFormatError" in err


def test_output_directory_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    rc, _, _ = run(["validate", "desk"], capsys)
    assert rc == 0
    assert (tmp_path / "envout" / "manifest.json").exists()


def test_export_then_solve_matches_in_process(tmp_path, capsys):
    rc, _, _ = run(["export", "desk", "--mission", "2", "--action", "1500", "--grid", "3", "3",
                    "--out", str(tmp_path)], capsys)
    assert rc == 0
    rc, out, _ = run(["solve", str(tmp_path / "mission_2.lp"), "--out", str(tmp_path)], capsys)
    assert rc == 0
    obj = float(out.split("objective ")[1].split(",")[0])

    sc = load_scenario("desk").replace(grid_points=(3, 3))
    design = compute_baseline(sc, DesignGrid.for_scenario(sc)).design
    direct = solve_milp(assemble_mission(CampaignState(tau=1), 1500.0, sc, design).model)
    assert obj == pytest.approx(direct.objective, rel=1e-9, abs=1e-9)
    assert (tmp_path / "solution.csv").read_text().startswith("variable,value\n")


def test_train_evaluate_and_replay(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    rc, _, _ = run(["train", "desk", "--out", str(a)] + TRAIN, capsys)
    assert rc == 0
    for name in ("episodes.csv", "training.png", "checkpoint.json", "manifest.json"):
        assert (a / name).exists()
    rc, _, _ = run(["evaluate", "desk", "--checkpoint", str(a / "checkpoint.json"),
                    "--cases", "4", "--grid", "3", "3", "--out", str(a / "eval")], capsys)
    assert rc == 0
    assert (a / "eval" / "evaluation.png").exists()

    rc, _, _ = run(["replay", str(a / "manifest.json"), "--out", str(b)], capsys)
    assert rc == 0
    assert (a / "episodes.csv").read_bytes() == (b / "episodes.csv").read_bytes()
    rc, _, _ = run(["replay", str(a / "eval" / "manifest.json"), "--out", str(b / "eval")],
                   capsys)
    assert rc == 0
    for name in ("eval_cases.csv", "eval_summary.csv"):
        assert (a / "eval" / name).read_bytes() == (b / "eval" / name).read_bytes()

    # a checkpoint only evaluates against the scenario it was trained on
    rc, _, err = run(["evaluate", "desk_det", "--checkpoint", str(a / "checkpoint.json"),
                      "--cases", "2", "--grid", "3", "3", "--out", str(tmp_path / "c")], capsys)
    assert rc == 2 and "ConfigurationError" in err
