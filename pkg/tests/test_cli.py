import json

import numpy as np
import pytest

from secfield.cli import main
from secfield.datasets import read_training_set
from secfield.dynamics import read_orbit


def run(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


@pytest.fixture(scope="module")
def arc_model(tmp_path_factory):
    out = tmp_path_factory.mktemp("arc")
    assert main(["--out", str(out), "gen", "--system", "circle:arc", "--n", "800"]) == 0
    assert main(["--out", str(out), "fit", "--data", str(out / "circle_arc.csv"),
                 "--epsilon", "0.2"]) == 0
    return out


def test_gen_row_counts(tmp_path):
    assert run(tmp_path, "gen", "--system", "circle:uniform", "--n", "800", "-o", str(tmp_path / "c.csv")) == 0
    assert read_training_set(tmp_path / "c.csv").n_samples == 800
    assert run(tmp_path, "gen", "--system", "torus:stepanoff", "--n1", "150", "--n2", "150",
               "-o", str(tmp_path / "t.csv")) == 0
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 22500 + 1


def test_gen_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "gen", "--system", "circle:uniform", "--n", "2") == 2
    assert run(tmp_path, "gen", "--system", "moebius:uniform", "--n", "20") == 2
    assert "error" in capsys.readouterr().err


def test_fit_outputs(arc_model):
    metrics = json.loads((arc_model / "circle_arc.metrics.json").read_text())
    assert metrics["r_squared"] >= 0.995
    assert set(metrics["wall_times"]) == {"1a_eigendecomposition", "1b_sec_regression",
                                         "1c_field_assembly"}
    assert metrics["gram_rank"] > 0 and len(metrics["eigenvalues_laplace"]) == 40
    first, rest = (arc_model / "circle_arc.metrics.json").read_text().split("\n", 1)
    assert "wall_times" in first and "wall_times" not in rest


def test_fit_is_deterministic(tmp_path, arc_model):
    assert run(tmp_path, "fit", "--data", str(arc_model / "circle_arc.csv"), "--epsilon", "0.2") == 0
    assert (tmp_path / "circle_arc.model.json").read_bytes() == \
        (arc_model / "circle_arc.model.json").read_bytes()
    strip = lambda p: p.read_text().split("\n", 1)[1]  # noqa: E731
    assert strip(tmp_path / "circle_arc.metrics.json") == strip(arc_model / "circle_arc.metrics.json")


def test_fit_config_errors_leave_no_files(tmp_path, capsys):
    assert run(tmp_path, "fit", "--system", "circle:arc", "--eta", "1e3") == 2
    assert "eta too large" in capsys.readouterr().err
    assert run(tmp_path, "fit", "--system", "circle:arc", "--J", "25") == 2
    assert run(tmp_path, "fit", "--system", "circle:arc", "--n", "30") == 2
    assert run(tmp_path, "fit") == 2
    assert list(tmp_path.iterdir()) == []


def test_fit_from_config_file(tmp_path):
    cfg = {"dataset": {"system": "circle:variable", "n": 400}, "kernel": {"epsilon": 0.25},
           "resolution": {"J": 8, "L": 12, "L1": 12, "L2": 24, "L_D": 24, "eta": 0.01},
           "seed": 0, "outputs": str(tmp_path / "out")}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["--config", str(tmp_path / "cfg.json"), "--threads", "1", "fit"]) == 0
    metrics = json.loads((tmp_path / "out" / "circle_variable.metrics.json").read_text())
    assert metrics["params"]["L2"] == 24 and metrics["epsilon"] == 0.25
    assert metrics["n_samples"] == 400


def test_bad_config_file(tmp_path):
    (tmp_path / "cfg.json").write_text('{"kernel": {}, "bogus": 1}')
    assert main(["--config", str(tmp_path / "cfg.json"), "fit", "--system", "circle:arc"]) == 2
    (tmp_path / "cfg.json").write_text("{")
    assert main(["--config", str(tmp_path / "cfg.json"), "fit", "--system", "circle:arc"]) == 4


def test_eval_grid(tmp_path, arc_model):
    model = str(arc_model / "circle_arc.model.json")
    assert run(tmp_path, "eval", "--model", model, "--grid=-5:5,-5:5", "--resolution", "21,21") == 0
    rows = np.loadtxt(tmp_path / "quiver.csv", delimiter=",", skiprows=1)
    assert rows.shape == (441, 4) and np.all(np.isfinite(rows))


def test_eval_training_reproduces_r_squared(tmp_path, arc_model, capsys):
    model = str(arc_model / "circle_arc.model.json")
    assert run(tmp_path, "eval", "--model", model, "--training", str(arc_model / "circle_arc.csv")) == 0
    reported = float(capsys.readouterr().out.split("R^2 = ")[1].split()[0])
    fitted = json.loads((arc_model / "circle_arc.metrics.json").read_text())["r_squared"]
    assert abs(reported - fitted) < 1e-10
    header = (tmp_path / "quiver.csv").read_text().splitlines()[0]
    assert header == "y_1,y_2,vhat_1,vhat_2,vtrue_1,vtrue_2"


def test_eval_points_and_errors(tmp_path, arc_model):
    model = str(arc_model / "circle_arc.model.json")
    (tmp_path / "pts.csv").write_text("y_1,y_2\n1.0,0.0\n0.0,1.5\n")
    assert run(tmp_path, "eval", "--model", model, "--points", str(tmp_path / "pts.csv")) == 0
    (tmp_path / "empty.csv").write_text("")
    assert run(tmp_path, "eval", "--model", model, "--points", str(tmp_path / "empty.csv")) == 2
    (tmp_path / "wide.csv").write_text("1,2,3\n")
    assert run(tmp_path, "eval", "--model", model, "--points", str(tmp_path / "wide.csv")) == 2
    doc = json.loads((arc_model / "circle_arc.model.json").read_text())
    doc["schema"] = "sec-field/model-v2"
    (tmp_path / "v2.json").write_text(json.dumps(doc))
    assert run(tmp_path, "eval", "--model", str(tmp_path / "v2.json"), "--grid=-1:1,-1:1") == 4
    assert run(tmp_path, "eval", "--model", str(tmp_path / "missing.json"), "--grid=-1:1,-1:1") == 4


def test_orbit_compare_pipeline(tmp_path, arc_model, capsys):
    model = str(arc_model / "circle_arc.model.json")
    assert run(tmp_path, "orbit", "--true", "circle:arc", "--theta0", "0", "--dt", "1e-3",
               "--t", "20", "-o", str(tmp_path / "a.csv")) == 0
    assert run(tmp_path, "orbit", "--model", model, "--theta0", "0", "--dt", "1e-3",
               "--t", "20", "-o", str(tmp_path / "b.csv")) == 0
    capsys.readouterr()
    assert run(tmp_path, "compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
               "--system", "circle:arc") == 0
    max_err = float(capsys.readouterr().out.split("max error = ")[1].split()[0])
    assert max_err < 0.2
    assert read_orbit(tmp_path / "b.csv").times.size == 20001


def test_orbit_usage_errors(tmp_path, arc_model):
    model = str(arc_model / "circle_arc.model.json")
    assert run(tmp_path, "orbit", "--true", "circle:arc") == 2
    assert run(tmp_path, "orbit", "--model", model) == 2
    assert run(tmp_path, "orbit", "--model", model, "--true", "circle:arc", "--theta0", "0") == 2
    assert run(tmp_path, "orbit", "--model", model, "--y0", "1,0,0") == 2


def test_compare_mismatched_grids(tmp_path):
    assert run(tmp_path, "orbit", "--true", "circle:uniform", "--theta0", "0", "--dt", "0.1",
               "--t", "1", "-o", str(tmp_path / "a.csv")) == 0
    assert run(tmp_path, "orbit", "--true", "circle:uniform", "--theta0", "0", "--dt", "0.05",
               "--t", "1", "-o", str(tmp_path / "b.csv")) == 0
    assert run(tmp_path, "compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")) == 2


def test_fixedpoint(tmp_path, arc_model, capsys):
    model = str(arc_model / "circle_arc.model.json")
    assert run(tmp_path, "fixedpoint", "--model", model, "--init-angle", "2.2") == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["angle"] - 2.30) < 0.05 and report["residual"] < 1e-8
    assert run(tmp_path, "fixedpoint", "--model", model) == 2


def test_sweep(tmp_path, capsys):
    assert run(tmp_path, "sweep", "--system", "circle:arc", "--n", "400",
               "--grid", "J=5,10 eta=0.01,1000") == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("J,L,L1,L2,L_D,eta,r_squared")
    assert len(lines) == 5
    ok = [ln for ln in lines[1:] if ln.endswith(",ok")]
    assert len(ok) == 2 and all(float(ln.split(",")[6]) > 0.99 for ln in ok)
    assert sum("eta too large" in ln for ln in lines) == 2
    assert run(tmp_path, "sweep", "--system", "circle:arc", "--grid", "Q=1") == 2


def test_reproduce_circle(tmp_path, capsys):
    assert run(tmp_path, "reproduce", "circle-v1") == 0
    report = (tmp_path / "circle-v1-full" / "report.md").read_text()
    lines = report.splitlines()
    assert lines[0].startswith("<!-- generated")
    assert "0.999731" in report and "PASS" in report
    assert not any("generated" in ln for ln in lines[1:])
    for name in ("model.json", "metrics.json", "orbit_true.csv", "orbit_model.csv",
                 "comparison.csv", "quiver.csv"):
        assert (tmp_path / "circle-v1-full" / name).exists()


def test_reproduce_unknown_preset(tmp_path, capsys):
    assert run(tmp_path, "reproduce", "bogus") == 2
    err = capsys.readouterr().err
    assert "circle-v1" in err and "torus-v3" in err


def test_argparse_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["reproduce", "torus-v1", "--scale", "huge"])
    assert run(tmp_path, "--threads", "0", "gen", "--system", "circle:arc", "--n", "5") == 2
