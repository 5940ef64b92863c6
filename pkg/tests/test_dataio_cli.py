"""Dataset bundle round trips and the command-line interface."""

import json
import os

import numpy as np
import pytest

from gmnar.cli import main
from gmnar.dataio import (DimensionMismatchError, read_bundle, truth_dict,
                          truth_objects, write_bundle)
from gmnar.simulate import SimConfig, simulate_gmnar


@pytest.fixture(scope="module")
def sim_small():
    cfg = SimConfig(N1=12, N2=10, T=6, scenario=1, seed=31)
    return cfg, simulate_gmnar(cfg)


@pytest.fixture(scope="module")
def bundle_dir(sim_small, tmp_path_factory):
    cfg, (data, nets, assign, params) = sim_small
    root = tmp_path_factory.mktemp("bundle")
    write_bundle(root, data, nets,
                 truth=truth_dict(assign, params, cfg.noise_sd),
                 config=json.loads(cfg.to_json()), seed=cfg.seed)
    return str(root)


class TestBundleIO:
    def test_round_trip_exact(self, sim_small, bundle_dir):
        _, (data, nets, assign, params) = sim_small
        _, data2, nets2, truth = read_bundle(bundle_dir)
        assert np.array_equal(data2.Y, data.Y)
        assert np.array_equal(data2.X, data.X)
        assert np.array_equal(data2.Z, data.Z)
        assert np.array_equal(nets2.A1, nets.A1)
        assert np.array_equal(nets2.A2, nets.A2)
        a2, p2 = truth_objects(truth)
        assert np.array_equal(a2.g, assign.g)
        assert np.allclose(p2.alpha, params.alpha)

    def test_manifest_contents(self, bundle_dir):
        bundle, *_ = read_bundle(bundle_dir)
        m = bundle.manifest
        assert (m["N1"], m["N2"], m["T"]) == (12, 10, 6)
        assert (m["p1"], m["p2"]) == (3, 3)
        assert len(m["config_hash"]) == 16
        assert "version" in m

    def test_missing_file_raises(self, sim_small, tmp_path):
        cfg, (data, nets, *_unused) = sim_small
        write_bundle(tmp_path, data, nets)
        os.remove(tmp_path / "x.csv")
        with pytest.raises(FileNotFoundError):
            read_bundle(tmp_path)

    def test_truncated_panel_is_dimension_mismatch(self, sim_small, tmp_path):
        cfg, (data, nets, *_unused) = sim_small
        write_bundle(tmp_path, data, nets)
        y = (tmp_path / "y.csv").read_text().splitlines()
        (tmp_path / "y.csv").write_text("\n".join(y[:-5]) + "\n")
        with pytest.raises(DimensionMismatchError):
            read_bundle(tmp_path)


class TestCli:
    def _simulate(self, tmp_path, name="d", **kw):
        cfg = SimConfig(N1=14, N2=12, T=6, scenario=1, seed=41, **kw)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(cfg.to_json())
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg_path),
                     "--out", str(out)]) == 0
        return out

    def test_simulate_then_fit(self, tmp_path, capsys):
        out = self._simulate(tmp_path)
        rep = tmp_path / "fit.json"
        code = main(["fit", "--data", str(out), "--g", "2", "--h", "2",
                     "--n-init", "2", "--out", str(rep)])
        assert code == 0
        report = json.loads(rep.read_text())
        assert report["G"] == 2 and report["H"] == 2
        assert report["q_value"] > 0
        assert "Q=" in capsys.readouterr().out

    def test_select_command(self, tmp_path):
        out = self._simulate(tmp_path)
        rep = tmp_path / "sel.json"
        code = main(["select", "--data", str(out), "--gmax", "2",
                     "--hmax", "2", "--n-init", "1", "--out", str(rep)])
        assert code == 0
        report = json.loads(rep.read_text())
        assert set(report) == {"eta", "chosen", "grid"}

    def test_select_diagonal_flag(self, tmp_path):
        out = self._simulate(tmp_path)
        rep = tmp_path / "sel.json"
        assert main(["select", "--data", str(out), "--gmax", "3",
                     "--hmax", "3", "--diagonal", "--n-init", "1",
                     "--out", str(rep)]) == 0
        report = json.loads(rep.read_text())
        assert all(row["G"] == row["H"] for row in report["grid"])

    def test_infer_command(self, tmp_path):
        out = self._simulate(tmp_path)
        rep = tmp_path / "inf.json"
        assert main(["infer", "--data", str(out), "--g", "2", "--h", "2",
                     "--n-init", "2", "--out", str(rep)]) == 0
        report = json.loads(rep.read_text())
        rows = report["inference"]["parameters"]
        assert any(r["name"] == "lambda_1" for r in rows)
        for r in rows:
            assert r["ci_lower"] <= r["estimate"] <= r["ci_upper"]

    def test_bad_config_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text("{not json")
        assert main(["simulate", "--config", str(cfg_path),
                     "--out", str(tmp_path / "o")]) == 2

    def test_nonstationary_exit_code(self, tmp_path):
        cfg = {"N1": 6, "N2": 5, "T": 3, "scenario": 0, "seed": 0,
               "params": {"lam": [0.7], "gamma": [0.6], "alpha": [[0.2]],
                          "zeta": [[0.1]], "delta": [[0.1]]}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["simulate", "--config", str(cfg_path),
                     "--out", str(tmp_path / "o")]) == 3

    def test_dimension_mismatch_exit_code(self, tmp_path):
        out = self._simulate(tmp_path)
        # corrupt the row network with an out-of-range node id
        with open(out / "row_network.csv", "a") as f:
            f.write("99,0\n")
        assert main(["fit", "--data", str(out), "--g", "2", "--h", "2",
                     "--out", str(tmp_path / "r.json")]) == 4

    def test_benchmark_smoke(self, tmp_path):
        out = tmp_path / "bench"
        code = main(["benchmark", "--scenario", "1", "--n1", "14",
                     "--n2", "12", "--t", "6", "--reps", "2",
                     "--n-init", "1", "--out", str(out)])
        assert code == 0
        assert (out / "benchmark.csv").exists()
        assert (out / "benchmark.json").exists()
        payload = json.loads((out / "benchmark.json").read_text())
        agg = payload["settings"][0]
        assert agg["reps"] == 2
