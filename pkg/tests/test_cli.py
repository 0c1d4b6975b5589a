import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from iokoopman.cli import ExperimentConfig, main
from iokoopman.errors import Diverged, ParseError, VersionMismatch
from iokoopman.lifting import random_configs
from iokoopman.modelio import load_model, load_provenance, model_to_dict, save_model
from iokoopman.prediction import predict_multi_step
from iokoopman.realization import realize_model

SMALL = dict(train_length=600, test_length=300, swarm_size=4, max_iterations=2)


def write_cfg(path, **kw):
    path.write_text(yaml.safe_dump({**SMALL, **kw}))
    return str(path)


@pytest.fixture
def corpus(tmp_path):
    cfg = write_cfg(tmp_path / "cfg.yaml")
    assert main(["gen-data", "--config", cfg, "--out", str(tmp_path / "data")]) == 0
    return tmp_path / "data", cfg


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestGenData:
    def test_files_and_checksums(self, corpus, tmp_path):
        data, cfg = corpus
        manifest = json.loads((data / "manifest.json").read_text())
        assert set(manifest["files"]) == {"train", "test"}
        assert manifest["files"]["train"]["seed"] == 42
        assert main(["gen-data", "--config", cfg, "--out", str(tmp_path / "again")]) == 0
        again = json.loads((tmp_path / "again" / "manifest.json").read_text())
        assert again["files"] == manifest["files"]
        assert main(["gen-data", "--config", cfg, "--seed", "7", "--out", str(tmp_path / "other")]) == 0
        other = json.loads((tmp_path / "other" / "manifest.json").read_text())
        assert other["files"]["train"]["sha256"] != manifest["files"]["train"]["sha256"]

    def test_unwritable_directory(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["gen-data", "--config", write_cfg(tmp_path / "c.yaml"),
                     "--out", str(blocker / "sub")]) != 0
        assert error_of(capsys)["error"] == "IOError"


class TestFit:
    def test_hdmd_has_no_search(self, corpus, capsys):
        data, cfg = corpus
        out = data.parent / "hdmd"
        assert main(["fit", "--config", cfg, "--variant", "HDMD", "--train",
                     str(data / "train.csv"), "--out", str(out)]) == 0
        assert (out / "model.json").exists()
        assert not (out / "optimization_log.csv").exists()
        assert "train one-step" in capsys.readouterr().out

    def test_gblk_writes_log(self, corpus):
        data, cfg = corpus
        out = data.parent / "gblk"
        assert main(["fit", "--config", cfg, "--train", str(data / "train.csv"), "--out", str(out)]) == 0
        lines = (out / "optimization_log.csv").read_text().splitlines()
        assert lines[0] == "iteration,best_J,mean_J,elapsed_seconds" and len(lines) == 3
        prov = load_provenance(out / "model.json")
        assert prov["config"]["swarm_size"] == 4 and len(prov["train_sha256"]) == 64

    def test_missing_dataset(self, tmp_path, capsys):
        assert main(["fit", "--train", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) != 0
        assert error_of(capsys)["error"] == "IOError"

    def test_unknown_config_key(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("swarm: 3\n")
        assert main(["gen-data", "--config", str(path)]) == 1
        assert error_of(capsys)["error"] == "ConfigError"


class TestEval:
    @pytest.fixture
    def fitted(self, corpus):
        data, cfg = corpus
        out = data.parent / "fit"
        assert main(["fit", "--config", cfg, "--variant", "LK", "--train",
                     str(data / "train.csv"), "--out", str(out)]) == 0
        return data, out

    def test_matches_fit_report(self, fitted):
        data, out = fitted
        assert main(["eval", "--model", str(out / "model.json"), "--data", str(data / "train.csv"),
                     "--out", str(out / "ev")]) == 0
        fit = json.loads((out / "fit_report.json").read_text())["train"]
        ev = json.loads((out / "ev" / "metrics.json").read_text())
        for mode in ("one_step", "multi_step"):
            np.testing.assert_allclose(ev[mode]["r2"], fit[mode]["r2"], rtol=0, atol=1e-12)
        header = (out / "ev" / "predictions.csv").read_text().splitlines()[0]
        assert header == "t,y1_true,y1_hat,y2_true,y2_hat"

    def test_channel_mismatch(self, fitted, capsys):
        data, out = fitted
        bad = data / "bad.csv"
        bad.write_text("t,y1,u1\n0.0,1.0,2.0\n0.1,2.0,1.0\n0.2,1.0,0.0\n0.3,0.0,1.0\n")
        assert main(["eval", "--model", str(out / "model.json"), "--data", str(bad),
                     "--out", str(out / "ev")]) == 1
        assert error_of(capsys)["error"] == "DimensionMismatch"

    def test_predict_command(self, fitted):
        data, out = fitted
        assert main(["predict", "--model", str(out / "model.json"), "--data",
                     str(data / "test.csv"), "--mode", "one_step", "--out", str(out)]) == 0
        assert (out / "predictions_one_step.csv").read_text().count("\n") == 300 - 3 + 1

    def test_eval_after_reload_is_identical(self, fitted, tmp_path):
        data, out = fitted
        model = load_model(out / "model.json")
        save_model(model, tmp_path / "copy.json")
        reports = []
        for i, path in enumerate((out / "model.json", tmp_path / "copy.json")):
            main(["eval", "--model", str(path), "--data", str(data / "test.csv"), "--out", str(tmp_path / f"e{i}")])
            m = json.loads((tmp_path / f"e{i}" / "metrics.json").read_text())
            reports.append({k: m[k] for k in ("one_step", "multi_step")})
        assert reports[0] == reports[1]


class TestModelFile:
    @pytest.mark.parametrize("variant", ["HDMD", "LK", "BLK", "BLK_POLY", "GBLK"])
    def test_round_trip_exact(self, plant_data, tmp_path, variant):
        psi, phi = random_configs(variant, 12, 6, 5, 5, np.random.default_rng(0), poly_order=3)
        model = realize_model(plant_data, variant, psi, phi)
        save_model(model, tmp_path / "m.json", {"seed": 1})
        back = load_model(tmp_path / "m.json")
        for name in ("A", "B0", "B", "C"):
            a, b = getattr(model, name), getattr(back, name)
            assert (a is None and b is None) or np.array_equal(a, b)
        assert np.array_equal(back.psi_cfg.centers, model.psi_cfg.centers)
        assert np.array_equal(back.norm_stats.mean, model.norm_stats.mean)
        assert np.array_equal(back.norm_stats.std, model.norm_stats.std)
        assert model_to_dict(back) == model_to_dict(model)
        if variant in ("BLK", "BLK_POLY"):
            assert back.phi_cfg is back.psi_cfg
        try:
            a = predict_multi_step(model, plant_data).y_hat
            b = predict_multi_step(back, plant_data).y_hat
            assert np.array_equal(a, b)
        except Diverged as exc:  # BLK_POLY may diverge; it must do so identically
            with pytest.raises(Diverged) as info:
                predict_multi_step(back, plant_data)
            assert info.value.step == exc.step

    def test_truncated(self, plant_data, tmp_path):
        psi, phi = random_configs("LK", 12, 6, 3, 0, np.random.default_rng(0))
        save_model(realize_model(plant_data, "LK", psi, phi), tmp_path / "m.json")
        text = (tmp_path / "m.json").read_text()
        (tmp_path / "m.json").write_text(text[: len(text) // 2])
        with pytest.raises(ParseError) as info:
            load_model(tmp_path / "m.json")
        assert info.value.line is not None and info.value.line > 1

    def test_future_version(self, plant_data, tmp_path):
        psi, phi = random_configs("LK", 12, 6, 3, 0, np.random.default_rng(0))
        d = model_to_dict(realize_model(plant_data, "LK", psi, phi))
        d["version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(d))
        with pytest.raises(VersionMismatch):
            load_model(tmp_path / "m.json")

    def test_missing_field(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"format": "iokoopman-model", "version": 1}))
        with pytest.raises(ParseError):
            load_model(tmp_path / "m.json")


def test_config_file_round_trip(tmp_path):
    path = write_cfg(tmp_path / "c.yaml", variant="BLK", holdout=0.2)
    cfg = ExperimentConfig.from_file(path)
    assert cfg.variant == "BLK" and cfg.holdout == 0.2 and cfg.pso().swarm_size == 4
    assert cfg.counts() == (10, 0)


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "iokoopman.cli", "eval", "--model",
                          str(tmp_path / "none.json"), "--data", str(tmp_path / "none.csv")],
                         capture_output=True, text=True)
    assert out.returncode == 3
    assert json.loads(out.stderr)["error"] == "IOError"
