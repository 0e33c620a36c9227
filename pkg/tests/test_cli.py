import csv
import io
import json

import numpy as np
import pytest

from latticefp.bounds import CAVEAT
from latticefp.cli import main
from latticefp.data import textile_path


def write_model(tmp_path, edges, states=("1", "2", "3")):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"schema_version": 1, "dt": 1, "states": [{"id": x} for x in states],
                                "edges": edges}))
    return str(path)


def edge(a, b, prob, kind, **params):
    return {"from": a, "to": b, "prob": prob, "dist": {"kind": kind, "params": params}}


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve") / "textile"
    assert main(["solve", str(textile_path()), "1", "3", "--out", str(out)]) == 0
    return out


def test_solve_writes_pmf_and_report(solved):
    report = json.loads(solved.with_suffix(".report.json").read_text())
    assert {"certificate", "moments", "timing", "diagnostics", "inputs_echo"} <= set(report)
    assert report["certificate"]["notes"] == CAVEAT
    assert report["certificate"]["N_used"] == 2**17
    assert report["inputs_echo"]["source"] == "1"
    rows = read_csv(solved.with_suffix(".pmf.csv").read_text())
    assert list(rows[0]) == ["n", "t", "probability", "error_bound"]
    assert len(rows) == report["rows"] == 2**17
    assert float(rows[2]["probability"]) == pytest.approx(0.02, abs=1e-6)


def test_solve_is_byte_stable(solved, tmp_path):
    again = tmp_path / "again"
    assert main(["solve", str(textile_path()), "1", "3", "--out", str(again)]) == 0
    assert (again.with_suffix(".pmf.csv").read_bytes()
            == solved.with_suffix(".pmf.csv").read_bytes())


def test_solve_monotone_with_plot(tmp_path):
    out = tmp_path / "mono"
    code = main(["solve", str(textile_path()), "1", "3", "--N", "1218", "--bound", "monotone",
                 "--M", "20", "--plot", "--out", str(out)])
    assert code == 0
    rows = read_csv(out.with_suffix(".pmf.csv").read_text())
    assert len(rows) == 609
    assert max(float(r["error_bound"]) for r in rows) <= 2.5e-6
    assert out.with_suffix(".pmf.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_monotone_requires_onset(tmp_path):
    assert main(["solve", str(textile_path()), "1", "3", "--bound", "monotone",
                 "--out", str(tmp_path / "x")]) == 2


def test_n_above_cap_is_numerical_failure(tmp_path, capsys):
    assert main(["solve", str(textile_path()), "1", "3", "--max-N", "1024",
                 "--out", str(tmp_path / "x")]) == 3
    assert not (tmp_path / "x.pmf.csv").exists()


def test_malformed_model_names_state(tmp_path, capsys):
    path = write_model(tmp_path, [
        edge("1", "2", 1.0, kind="geometric", p=0.5),
        edge("2", "1", 0.85, kind="geometric", p=0.5),
        edge("2", "3", 0.05, kind="geometric", p=0.5),
    ])
    assert main(["solve", path, "1", "3", "--out", str(tmp_path / "x")]) == 2
    assert "'2'" in capsys.readouterr().err


def test_missing_model_file(tmp_path):
    assert main(["moments", str(tmp_path / "none.json"), "1", "3"]) == 2


def test_moments_json(tmp_path, capsys):
    path = write_model(tmp_path, [edge("1", "2", 1.0, kind="geometric", p=0.8)], ("1", "2"))
    assert main(["moments", path, "1", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["first_passage"]["mean"] == pytest.approx(1.25)
    assert doc["first_passage"]["variance"] == pytest.approx(0.3125)
    assert doc["edges"][0]["mean"] == pytest.approx(1.25)


def test_moments_infinite_mean(tmp_path, capsys):
    path = write_model(tmp_path, [edge("1", "2", 0.5, kind="geometric", p=0.5),
                                  edge("1", "3", 0.5, kind="geometric", p=0.5)])
    assert main(["moments", path, "1", "3"]) == 3
    assert "infinite expected first passage" in capsys.readouterr().err


def test_transform_forward_poisson(capsys):
    assert main(["transform", "poisson:lambda=5", "--N", "16"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 16 and list(rows[0]) == ["k", "omega", "re", "im"]
    assert float(rows[0]["re"]) == pytest.approx(0.999931, abs=1e-6)
    assert float(rows[1]["omega"]) == pytest.approx(1 / 16)


def test_transform_point_mass(capsys):
    assert main(["transform", "empirical:[1]", "--N", "8"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert all(float(r["re"]) == 1 and float(r["im"]) == 0 for r in rows)


def test_transform_round_trip(tmp_path, capsys):
    spec = tmp_path / "spec.csv"
    assert main(["transform", "discrete_weibull:q=0.3,b=0.5", "--N", "64",
                 "--out", str(spec)]) == 0
    assert main(["transform", "--direction", "inverse", "--input", str(spec)]) == 0
    rows = read_csv(capsys.readouterr().out)
    from latticefp.lattice import DistributionSpec, pmf_array
    truth = pmf_array(DistributionSpec.discrete_weibull(0.3, 0.5), np.arange(64))
    got = np.array([float(r["re"]) for r in rows])
    assert np.abs(got - truth).max() < 1e-12


@pytest.mark.parametrize("argv", [
    ["transform", "poisson:lambda=5"],
    ["transform", "poisson:lambda=-1", "--N", "8"],
    ["transform", "--direction", "inverse", "--input", "/nonexistent/spectrum.csv"],
])
def test_transform_errors(argv):
    assert main(argv) == 2


def test_simulate_single_run(capsys):
    assert main(["simulate", str(textile_path()), "1", "3", "--runs", "1", "--seed", "4"]) == 0
    rows = read_csv(capsys.readouterr().out)
    probs = [float(r["probability"]) for r in rows]
    assert sum(p > 0 for p in probs) == 1 and sum(probs) == 1


def test_simulate_bad_arguments():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", str(textile_path()), "1", "3", "--seed", "abc"])
    assert exc.value.code == 2
    assert main(["simulate", str(textile_path()), "1", "3", "--seed", "-3"]) == 2
    assert main(["simulate", str(textile_path()), "1", "3", "--runs", "0"]) == 2
