import json
from pathlib import Path

import pytest

from primvox.cli import main


@pytest.fixture(autouse=True)
def fixed_epoch(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")


@pytest.fixture()
def small_config(tmp_path):
    cfg = tmp_path / "config.yaml"
    cfg.write_text(
        "grid: [48, 48, 48]\n"
        "m_objects: 4\n"
        "n_samples: 2\n"
        "master_seed: 5\n"
    )
    return cfg


@pytest.fixture()
def small_dataset(tmp_path, small_config):
    out = tmp_path / "ds"
    assert main(["generate", str(small_config), "--out", str(out)]) == 0
    return out / "manifest.json"


class TestGenerate:
    def test_success_and_validate(self, small_dataset):
        assert main(["validate", str(small_dataset)]) == 0

    def test_unknown_key_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("intencity: 128\n")
        assert main(["generate", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "intencity" in capsys.readouterr().err

    def test_missing_config_exit_2(self, tmp_path):
        assert main(
            ["generate", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]
        ) == 2

    def test_profile_planar(self, tmp_path, small_config):
        out = tmp_path / "planar"
        assert main(
            [
                "generate", str(small_config),
                "--profile", "planar",
                "--out", str(out),
            ]
        ) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["planar_mode"] is True
        for entry in manifest["samples"]:
            for rec in entry["placements"]:
                assert rec["params"]["z_max"] == 0

    def test_seed_flag_overrides(self, tmp_path, small_config):
        out = tmp_path / "seeded"
        assert main(
            ["generate", str(small_config), "--seed", "99", "--out", str(out)]
        ) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["master_seed"] == 99


class TestValidate:
    def test_missing_manifest_exit_2(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == 2

    def test_fault_injected_exit_1(self, small_dataset, capsys):
        manifest = json.loads(small_dataset.read_text())
        victim = small_dataset.parent / manifest["samples"][0]["s_path"]
        blob = bytearray(victim.read_bytes())
        blob[352 + 77] = 9
        victim.write_bytes(bytes(blob))
        assert main(["validate", str(small_dataset)]) == 1
        out = capsys.readouterr().out
        assert "sample 0" in out


class TestStats:
    def test_human_output(self, small_dataset, capsys):
        assert main(["stats", str(small_dataset)]) == 0
        out = capsys.readouterr().out
        assert "class histogram" in out

    def test_json_output(self, small_dataset, capsys):
        assert main(["stats", str(small_dataset), "--json"]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["n_samples"] == 2

    def test_missing_manifest_exit_2(self, tmp_path):
        assert main(["stats", str(tmp_path / "nope.json")]) == 2


class TestPreview:
    def test_writes_png(self, small_dataset, tmp_path):
        out = tmp_path / "p.png"
        assert main(
            [
                "preview", str(small_dataset),
                "--sample", "0", "--axis", "z", "--slice", "24",
                "--out", str(out),
            ]
        ) == 0
        assert out.exists()

    def test_default_mid_slice(self, small_dataset, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["preview", str(small_dataset)]) == 0
        assert Path("preview_000000_z24.png").exists()

    def test_out_of_range_slice(self, small_dataset):
        assert main(
            ["preview", str(small_dataset), "--slice", "10000"]
        ) == 2

    def test_sample_out_of_range(self, small_dataset):
        assert main(["preview", str(small_dataset), "--sample", "5"]) == 2
