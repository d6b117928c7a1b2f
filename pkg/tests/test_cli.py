import csv
import json

import numpy as np
import pytest

from sarjump import load_dataset, load_model
from sarjump.cli import main, read_counts

MODEL_DOC = {
    "n": 2, "n_a": 1, "n_c": 1,
    "subsystems": [{"a": [0.3], "c": [1.0]}, {"a": [-0.5], "c": [-1.0]}],
    "ptm": [[0.7, 0.3], [0.4, 0.6]],
    "noise": {"family": "normal", "variance": 0.01},
}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "m.json").write_text(json.dumps(MODEL_DOC))
    return tmp_path


def test_full_chain(workdir, capsys):
    assert main(["simulate", "--model", "m.json", "--n", "50000", "--seed", "3",
                 "--input", "gaussian", "--out", "d.csv"]) == 0
    ds = load_dataset("d.csv")
    assert ds.N == 50000 and ds.truth is not None

    assert main(["identify", "--data", "d.csv", "--n-modes", "2", "--out", "est.json",
                 "--truth", "m.json", "--dump-matrix", "M.csv"]) == 0
    out = capsys.readouterr().out
    assert "threshold-hit" in out and "default" in out
    model, _, noise = load_model("est.json")
    assert abs(noise.sigma - 0.1) < 0.02
    np.testing.assert_allclose(model.a[:, 0], [0.3, -0.5], atol=0.05)  # aligned to truth
    assert np.loadtxt("M.csv", delimiter=",").shape == (6, 6)
    with open("est.errors.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and max(float(r["abs_error"]) for r in rows) < 0.05

    assert main(["decode", "--data", "d.csv", "--model", "est.json", "--out", "dec.csv"]) == 0
    with open("dec.csv") as fh:
        dec = list(csv.DictReader(fh))
    assert dec[0]["start"] == "2" and len(dec[0]["hypothesis"].split()) == 2
    counts = read_counts("dec.counts.csv")
    assert counts.total == len(dec)

    capsys.readouterr()
    assert main(["estimate-ptm", "--counts", "dec.counts.csv", "--truth", "m.json",
                 "--out", "p.json"]) == 0
    norm = float(capsys.readouterr().out.strip().splitlines()[-1].split()[-1])
    assert norm < 0.1
    p = json.loads((workdir / "p.json").read_text())["ptm"]
    np.testing.assert_allclose(np.sum(p, axis=1), 1.0)


def test_decode_sigma_override(workdir):
    main(["simulate", "--model", "m.json", "--n", "2000", "--sigma2", "0", "--out", "d.csv"])
    doc = dict(MODEL_DOC)
    del doc["noise"]
    (workdir / "bare.json").write_text(json.dumps(doc))
    assert main(["decode", "--data", "d.csv", "--model", "bare.json", "--out", "x.csv"]) == 1
    assert main(["decode", "--data", "d.csv", "--model", "bare.json", "--sigma", "0",
                 "--out", "x.csv", "--counts", "c.csv"]) == 0
    assert read_counts("c.csv").total > 0


def test_estimate_ptm_unvisited(workdir, capsys):
    (workdir / "c.csv").write_text("from,to_1,to_2\n1,0,0\n2,1,0\n")
    assert main(["estimate-ptm", "--counts", "c.csv", "--out", "p.json"]) == 0
    assert "unvisited" in capsys.readouterr().out
    assert json.loads((workdir / "p.json").read_text())["ptm"][0] == [0.5, 0.5]
    (workdir / "bad.csv").write_text("a,b\n1,2\n")
    assert main(["estimate-ptm", "--counts", "bad.csv", "--out", "p.json"]) == 1


def test_experiment_and_sweep(workdir, capsys):
    cfg = {"sigma2": [0.03], "N": [200, 2000], "seeds": [0]}
    (workdir / "cfg.json").write_text(json.dumps(cfg))
    assert main(["experiment", "--config", "cfg.json", "--out-dir", "run"]) == 0
    assert (workdir / "run" / "runs.csv").exists()
    assert main(["experiment", "--config", "cfg.json", "--seeds", "0", "1"]) == 0
    out = capsys.readouterr().out
    assert len(out.strip().splitlines()) == 5  # header + 2 seeds x 2 lengths
    assert main(["sweep", "--config", "cfg.json", "--out-dir", "sw", "--workers", "2"]) == 0
    assert main(["plot", "--sweep", "sw/sweep.csv", "--out", "fig.svg"]) == 0
    assert (workdir / "fig.svg").read_text().startswith("<svg")
    assert main(["experiment", "--model", "m.json", "--N", "500", "--seeds", "2"]) == 0


def test_exit_codes(workdir):
    assert main(["experiment", "--sigma2", "-1"]) == 1
    assert main(["experiment", "--config", "missing.json"]) == 1
    assert main(["sweep", "--N", "100"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    unstable = dict(MODEL_DOC, subsystems=[{"a": [1.5], "c": [1.0]}, {"a": [1.2], "c": [1.0]}])
    (workdir / "u.json").write_text(json.dumps(unstable))
    assert main(["experiment", "--model", "u.json", "--N", "100000"]) == 2
    assert main(["simulate", "--model", "u.json", "--n", "100000", "--out", "x.csv"]) == 2
