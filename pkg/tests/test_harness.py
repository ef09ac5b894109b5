import csv
import json

import numpy as np
import pytest
import yaml

from invmetrics.cli import main
from invmetrics.domains import Annulus, Ball, Polydisc
from invmetrics.harness import (
    OUTPUT_ENV, ExperimentConfig, ExperimentReport, run_experiment, sample_pairs,
)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig("nonsense")
    with pytest.raises(ValueError):
        ExperimentConfig("gap", tolerances={"min_certified": -1})
    cfg = ExperimentConfig("equality", budget={"degree": 6}, seed=3)
    b = cfg.make_budget()
    assert b.degree == 6 and b.seed == 3
    assert cfg.tol("missing", 0.5) == 0.5


def test_config_from_yaml_with_shared_keys(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({
        "seed": 7, "samples": {"pairs": 2},
        "experiments": [{"experiment": "equality", "name": "a"},
                        {"experiment": "asymptotics"}]}))
    cfgs = ExperimentConfig.from_yaml(path)
    assert [c.experiment for c in cfgs] == ["equality", "asymptotics"]
    assert all(c.seed == 7 for c in cfgs) and cfgs[0].name == "a"


def test_output_directory_precedence(monkeypatch, tmp_path):
    cfg = ExperimentConfig("asymptotics", output=str(tmp_path / "a"))
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert cfg.output_dir == tmp_path / "a"
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "b"))
    assert cfg.output_dir == tmp_path / "b"


def test_sample_pairs_are_seeded_and_interior():
    B = Ball(2)
    p1 = sample_pairs(B, {"pairs": 5, "radius": 0.5}, 1)
    p2 = sample_pairs(B, {"pairs": 5, "radius": 0.5}, 1)
    assert all(np.array_equal(a[0], b[0]) for a, b in zip(p1, p2))
    assert all(np.linalg.norm(z) <= 0.5 and np.linalg.norm(w) <= 0.5 for z, w in p1)
    poly = sample_pairs(Polydisc(2), {"pairs": 5, "radius": 0.5}, 1)
    assert all(np.max(np.abs(z)) <= 0.5 for z, _ in poly)
    ann = sample_pairs(Annulus(0.25), {"pairs": 5, "mode": "annulus", "moduli": [0.3, 0.9]}, 0)
    assert all(0.3 <= abs(z[0]) <= 0.9 for z, _ in ann)
    explicit = sample_pairs(B, {"points": [[[0, 0], ["0.1+0.2j", 0]]]}, 0)
    assert explicit[0][1][0] == 0.1 + 0.2j


def test_equality_experiment_writes_outputs(tmp_path):
    cfg = ExperimentConfig("equality", domain={"tag": "UnitDisc"}, samples={"pairs": 3},
                           budget={"degree": 12, "n_random": 0, "agree": 1}, name="disc",
                           params={"directions": [[1.0]]})
    rep = run_experiment(cfg)
    assert rep.passed, rep.verdicts
    assert rep.numbers["pairs"] == 3 and rep.numbers["ordering_violations"] == 0
    out = rep.write(tmp_path)
    data = json.loads((out / "disc.json").read_text())
    assert data["passed"] and len(data["comparisons"]) == 3
    rows = list(csv.DictReader((out / "disc_pairs.csv").open()))
    assert len(rows) == 3 and "l_up" in rows[0]
    assert (out / "disc.svg").read_text().lstrip().startswith("<?xml")


def test_parallel_cases_match_sequential(tmp_path):
    kw = dict(domain={"tag": "Ball", "n": 2}, samples={"pairs": 3},
              budget={"degree": 12, "n_random": 0, "agree": 1})
    seq = run_experiment(ExperimentConfig("equality", **kw))
    par = run_experiment(ExperimentConfig("equality", params={"workers": 2}, **kw))
    assert [c.l_up for c in par.comparisons] == [c.l_up for c in seq.comparisons]
    assert [c.c_low for c in par.comparisons] == [c.c_low for c in seq.comparisons]
    assert par.passed
    # witnesses from workers keep their parameters for serialization
    assert json.loads((par.write(tmp_path) / "equality.json").read_text())["passed"]


def test_asymptotics_experiment_numbers():
    rep = run_experiment(ExperimentConfig("asymptotics", params={"dists": [1e-2, 1e-4]}))
    ratios = [r["ratio"] for r in rep.tables["ratios"]]
    # c(0, z) = atanh(1 - d) = (log(2 - d) - log d) / 2
    assert ratios[1] == pytest.approx(0.5 * (np.log(2 - 1e-4) - np.log(1e-4)) / -np.log(1e-4))
    assert "limit_window" in rep.verdicts


def test_lbk_requires_boundary_point():
    cfg = ExperimentConfig("lbk", params={"cases": [{"domain": {"tag": "Ball", "n": 2},
                                                     "p": [0, 0.5], "q": [0, 0]}]})
    with pytest.raises(ValueError):
        run_experiment(cfg)


def test_report_passed_requires_all_verdicts():
    rep = ExperimentReport("gap", {}, 0, verdicts={"a": True, "b": False})
    assert not rep.passed


def test_cli_metric(capsys):
    assert main(["metric", "l", "--domain", "{tag: UnitDisc}", "--z", "0", "--w", "0.5",
                 "--degree", "8"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(np.arctanh(0.5), abs=1e-6)
    assert out["closed_form"] == pytest.approx(np.arctanh(0.5))


def test_cli_metric_direction(capsys):
    assert main(["metric", "kappa", "--domain", "{tag: Ball, n: 2}", "--z", "0,0",
                 "--v", "1,0", "--degree", "8"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0, abs=1e-6)


def test_cli_compare_and_geodesic(capsys):
    assert main(["compare", "--domain", "{tag: Ball, n: 2}", "--z", "0,0", "--w", "0.3,0.1j",
                 "--degree", "8"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ordering_violations"] == []
    assert main(["geodesic", "--z", "0.2,0", "--w", "0.2,0.3"]) == 0
    assert json.loads(capsys.readouterr().out)["certificate"]["passes"]


def test_cli_report_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    path = tmp_path / "asym.yaml"
    path.write_text(yaml.safe_dump({"experiment": "asymptotics",
                                    "params": {"dists": [1e-2]},
                                    "tolerances": {"ratio_lo": 0.5, "ratio_hi": 0.7}}))
    assert main(["report", "--config", str(path), "--output", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "asymptotics.json").exists()
    path.write_text(yaml.safe_dump({"experiment": "asymptotics", "params": {"dists": [1e-2]}}))
    assert main(["report", "--config", str(path), "--output", str(tmp_path / "o")]) == 1


def test_cli_reports_errors(capsys):
    assert main(["metric", "l", "--domain", "{tag: Ball, n: 2}", "--z", "2,0", "--w", "0,0"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_report_filters_by_name(tmp_path, capsys):
    path = tmp_path / "two.yaml"
    path.write_text(yaml.safe_dump({"params": {"dists": [1e-2]},
                                    "tolerances": {"ratio_lo": 0.5, "ratio_hi": 0.7},
                                    "experiments": [{"experiment": "asymptotics", "name": "a"},
                                                    {"experiment": "asymptotics", "name": "b"}]}))
    assert main(["report", "--config", str(path), "--name", "b",
                 "--output", str(tmp_path / "o")]) == 0
    assert [r["experiment"] for r in json.loads(capsys.readouterr().out)] == ["b"]
    assert not (tmp_path / "o" / "a.json").exists()
    with pytest.raises(SystemExit):
        main(["report", "--config", str(path), "--name", "zzz"])
