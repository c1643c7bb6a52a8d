import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from evspec.cli import main
from evspec.io import read_model, read_tensor, write_tensor_array

SMALL_SPEC = {
    "latitudes_deg": [-30.0, 0.0, 30.0],
    "N": 12,
    "K": 20,
    "R": 3,
    "mask": "half-split",
    "bands": {
        "land": {"phi": 0.1, "alpha": 1.5, "nu": 0.5},
        "ocean": {"phi": 0.05, "alpha": 0.5, "nu": 1.5},
        "taper": {"g": 0, "gamma": 1.0},
    },
    "coherence": {"mode": "stationary", "xi": 0.6, "tau": 0.5},
    "temporal": {"phi1": 0.4, "phi2": -0.1, "sigma": 1.0},
    "trend": {"offset": 5.0, "slope": 0.1},
}
QUICK = {"g_range": [-1, 1], "max_fev": 800, "start_points": [[1.0, 1.0]]}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "spec.json").write_text(json.dumps(SMALL_SPEC))
    (d / "quick.json").write_text(json.dumps(QUICK))
    assert main(["gen-synthetic", "--spec", str(d / "spec.json"), "--seed", "4", "--out-dir", str(d / "syn")]) == 0
    for v in ("ind", "ax"):
        argv = ["fit", "--data", str(d / "syn/data.evsp"), "--mask", str(d / "syn/mask.csv"), "--variant", v,
                "--out-model", str(d / f"{v}.json"), "--config", str(d / "quick.json")]
        assert main(argv) == 0
    return d


def test_gen_synthetic_deterministic(workdir, tmp_path):
    assert main(["gen-synthetic", "--spec", str(workdir / "spec.json"), "--seed", "4", "--out-dir", str(tmp_path)]) == 0
    for name in ("data.evsp", "mask.csv", "truth.json"):
        assert (tmp_path / name).read_bytes() == (workdir / "syn" / name).read_bytes()


def test_gen_synthetic_zero_noise(tmp_path):
    spec = dict(SMALL_SPEC, noise_scale=0.0)
    (tmp_path / "s.json").write_text(json.dumps(spec))
    assert main(["gen-synthetic", "--spec", str(tmp_path / "s.json"), "--out-dir", str(tmp_path)]) == 0
    field = read_tensor(tmp_path / "data.evsp")
    _, trend = read_model(tmp_path / "truth.json")
    assert np.array_equal(field.values, np.repeat(trend.values[..., None], 3, axis=-1))


def test_compare_nesting(workdir, tmp_path):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--model", str(workdir / "ind.json"), "--model", str(workdir / "ax.json"), "--out-csv", str(out)]) == 0
    rows = {r["variant"]: r for r in read_rows(out)}
    assert list(read_rows(out)[0]) == ["variant", "param_count", "loglik", "dloglik_norm", "bic"]
    assert float(rows["ax"]["loglik"]) > float(rows["ind"]["loglik"])
    assert float(rows["ind"]["dloglik_norm"]) == 0.0
    assert int(rows["ax"]["param_count"]) == 3 * 3 + 2
    n = 3 * 12 * 18 * 2
    assert float(rows["ax"]["dloglik_norm"]) == pytest.approx(
        (float(rows["ax"]["loglik"]) - float(rows["ind"]["loglik"])) / n
    )


def test_compression_ind(workdir, capsys):
    assert main(["report-compression", "--model", str(workdir / "ind.json"), "--trend-policy", "none"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["ratio"] == pytest.approx(3 / (20 * 3))
    assert main(["report-compression", "--model", str(workdir / "ind.json"), "--data-dims", "3,12,40,6"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["dims"] == [3, 12, 40, 6]


def test_diagnose_contrasts_ax(workdir, tmp_path):
    out = tmp_path / "c.csv"
    argv = ["diagnose", "--model", str(workdir / "ax.json"), "--data", str(workdir / "syn/data.evsp"),
            "--report", "contrasts", "--out-csv", str(out)]
    assert main(argv) == 0
    rows = read_rows(out)
    for m in range(3):
        vals = [float(r["model_ew"]) for r in rows if int(r["m"]) == m]
        assert len(vals) == 12 and max(vals) - min(vals) <= 1e-12 * max(vals)


def test_diagnose_periodogram(workdir, tmp_path):
    out = tmp_path / "p.csv"
    argv = ["diagnose", "--data", str(workdir / "syn/data.evsp"), "--mask", str(workdir / "syn/mask.csv"),
            "--report", "periodogram", "--out-csv", str(out)]
    assert main(argv) == 0
    rows = read_rows(out)
    assert len(rows) == 3 * 12 and all(float(r["land"]) >= 0 for r in rows)


def test_diagnose_periodogram_with_sds(workdir, tmp_path):
    write_tensor_array(tmp_path / "sd.evsp", np.radians([-30.0, 0.0, 30.0]), np.full((3, 12, 1, 1), 2.0))
    out = tmp_path / "p.csv"
    argv = ["diagnose", "--data", str(workdir / "syn/data.evsp"), "--mask", str(workdir / "syn/mask.csv"),
            "--sds", str(tmp_path / "sd.evsp"), "--report", "periodogram", "--out-csv", str(out)]
    assert main(argv) == 0


def test_simulate_policies(workdir, tmp_path):
    for policy in ("store-full", "store-spline-knots", "none"):
        out = tmp_path / f"{policy}.evsp"
        argv = ["simulate", "--model", str(workdir / "ax.json"), "--trend-policy", policy, "--runs", "2",
                "--seed", "1", "--out", str(out)]
        assert main(argv) == 0
        assert read_tensor(out).grid.shape == (3, 12, 20, 2)


def test_simulate_deterministic(workdir, tmp_path):
    for name in ("a", "b"):
        argv = ["simulate", "--model", str(workdir / "ax.json"), "--runs", "2", "--seed", "8", "--out", str(tmp_path / name)]
        assert main(argv) == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


class TestExitCodes:
    def test_unknown_flag(self, capsys):
        assert main(["fit", "--bogus"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["report-compression", "--model", str(tmp_path / "none.json")]) == 3

    def test_truncated_tensor(self, workdir, tmp_path):
        raw = (workdir / "syn/data.evsp").read_bytes()
        (tmp_path / "t.evsp").write_bytes(raw[:-16])
        argv = ["fit", "--data", str(tmp_path / "t.evsp"), "--mask", str(workdir / "syn/mask.csv"), "--out-model", "x"]
        assert main(argv) == 7

    def test_bad_magic(self, workdir, tmp_path):
        raw = (workdir / "syn/data.evsp").read_bytes()
        (tmp_path / "t.evsp").write_bytes(b"XXXX" + raw[4:])
        argv = ["fit", "--data", str(tmp_path / "t.evsp"), "--mask", str(workdir / "syn/mask.csv"), "--out-model", "x"]
        assert main(argv) == 6

    def test_validation(self, workdir, tmp_path):
        (tmp_path / "m.csv").write_text("0,1\n")
        argv = ["fit", "--data", str(workdir / "syn/data.evsp"), "--mask", str(tmp_path / "m.csv"), "--out-model", "x"]
        assert main(argv) == 4

    def test_bad_spec(self, tmp_path):
        (tmp_path / "s.json").write_text(json.dumps({"N": 4}))
        assert main(["gen-synthetic", "--spec", str(tmp_path / "s.json"), "--out-dir", str(tmp_path)]) == 4

    def test_bad_data_dims(self, workdir):
        assert main(["report-compression", "--model", str(workdir / "ind.json"), "--data-dims", "1,2"]) == 2

    def test_zero_variance_is_validation(self, workdir, tmp_path):
        write_tensor_array(tmp_path / "c.evsp", np.radians([-30.0, 0.0, 30.0]), np.ones((3, 12, 20, 3)))
        argv = ["fit", "--data", str(tmp_path / "c.evsp"), "--mask", str(workdir / "syn/mask.csv"),
                "--variant", "ind", "--out-model", str(tmp_path / "x.json")]
        assert main(argv) == 4


def test_threads_env_invariance(workdir, tmp_path):
    outs = []
    for env_threads in ("1", "2"):
        out = tmp_path / f"m{env_threads}.json"
        cmd = [sys.executable, "-m", "evspec", "fit", "--data", str(workdir / "syn/data.evsp"),
               "--mask", str(workdir / "syn/mask.csv"), "--variant", "ev-st", "--out-model", str(out),
               "--config", str(workdir / "quick.json")]
        env = {"EVSP_THREADS": env_threads, "PATH": "/usr/bin:/bin"}
        subprocess.run(cmd, check=True, env=env, capture_output=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
